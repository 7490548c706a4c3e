use std::str::FromStr;

use super::{
    sort_diagnostics, BenchProgram, Birefringence, DetectorSpec, GpElement, Located, MeasureKind, ParseDiagnostic,
    ScanSpec, ScanTarget, SourceSpec,
};
use crate::counting::Sampling;
use crate::polarization::Polarization;

/// A successfully parsed program plus any warnings.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub program: BenchProgram,
    pub warnings: Vec<ParseDiagnostic>,
}

#[derive(Clone, Copy, Debug)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let code = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in code.char_indices().enumerate() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some((byte, col + 1)),
            (true, Some((b, c))) => {
                out.push(Token {
                    text: &code[b..byte],
                    column: c,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some((b, c)) = start {
        out.push(Token { text: &code[b..], column: c });
    }
    out
}

/// Collects diagnostics for one line.
struct Ctx<'d> {
    line: usize,
    diags: &'d mut Vec<ParseDiagnostic>,
    ok: bool,
}

impl Ctx<'_> {
    fn error(&mut self, column: usize, msg: impl Into<String>) {
        self.ok = false;
        self.diags.push(ParseDiagnostic::error(self.line, column, msg));
    }

    fn warn(&mut self, column: usize, msg: impl Into<String>) {
        self.diags.push(ParseDiagnostic::warning(self.line, column, msg));
    }

    fn number(&mut self, tok: Token) -> Option<f64> {
        match tok.text.parse::<f64>() {
            Ok(x) if x.is_finite() => Some(x),
            _ => {
                self.error(tok.column, format!("expected a number, found `{}`", tok.text));
                None
            }
        }
    }

    fn fraction(&mut self, tok: Token, name: &str) -> Option<f64> {
        let x = self.number(tok)?;
        if (0.0..=1.0).contains(&x) {
            Some(x)
        } else {
            self.error(tok.column, format!("{name} must lie in [0, 1], got {x}"));
            None
        }
    }

    fn arity(&mut self, keyword: Token, args: &[Token], n: usize, usage: &str) -> bool {
        if args.len() == n {
            return true;
        }
        let col = args.get(n).map_or(keyword.column, |t| t.column);
        self.error(col, format!("expected `{usage}`"));
        false
    }

    /// Splits `key=value` arguments, rejecting unknown and repeated keys.
    fn pairs<'a>(&mut self, stmt: &str, args: &[Token<'a>], known: &[&str]) -> Vec<(&'a str, Token<'a>)> {
        let mut out: Vec<(&str, Token)> = Vec::new();
        for tok in args {
            let Some((key, value)) = tok.text.split_once('=') else {
                self.error(tok.column, format!("expected key=value, found `{}`", tok.text));
                continue;
            };
            if !known.contains(&key) {
                self.error(
                    tok.column,
                    format!("unknown key `{key}` for `{stmt}` (expected one of {})", known.join(", ")),
                );
                continue;
            }
            if out.iter().any(|(k, _)| *k == key) {
                self.error(tok.column, format!("duplicate key `{key}`"));
                continue;
            }
            let vcol = tok.column + key.chars().count() + 1;
            if value.is_empty() {
                self.error(vcol, format!("missing value for `{key}`"));
                continue;
            }
            out.push((key, Token { text: value, column: vcol }));
        }
        out
    }
}

fn lookup<'a>(pairs: &[(&str, Token<'a>)], key: &str) -> Option<Token<'a>> {
    pairs.iter().find(|(k, _)| *k == key).map(|(_, t)| *t)
}

#[derive(Default)]
struct Builder {
    pump: Option<Located<Polarization>>,
    gp: Vec<Located<GpElement>>,
    source: Option<Located<SourceSpec>>,
    birefringence: Option<Located<Birefringence>>,
    imbalance: Option<Located<Vec<(f64, f64)>>>,
    detector: Option<Located<DetectorSpec>>,
    signal_analyzer: Option<Located<Polarization>>,
    scan: Option<Located<ScanSpec>>,
    measure: Option<Located<MeasureKind>>,
    seed: Option<Located<u64>>,
    /// First line each singleton keyword appeared on, valid or not.
    seen: Vec<(&'static str, usize)>,
}

const SINGLETONS: [&str; 9] = [
    "pump",
    "source",
    "birefringence",
    "imbalance",
    "detector",
    "analyzer",
    "scan",
    "measure",
    "seed",
];

/// Parses a whole program, collecting every diagnostic rather than stopping
/// at the first. Diagnostics are sorted by line, then column.
pub fn parse(text: &str) -> Result<Parsed, Vec<ParseDiagnostic>> {
    let mut diags = Vec::new();
    let mut b = Builder::default();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let tokens = tokenize(raw);
        let Some((&kw, args)) = tokens.split_first() else {
            continue;
        };
        let mut cx = Ctx {
            line,
            diags: &mut diags,
            ok: true,
        };
        if let Some(&name) = SINGLETONS.iter().find(|&&s| s == kw.text) {
            if let Some(&(_, first)) = b.seen.iter().find(|(n, _)| *n == name) {
                cx.error(kw.column, format!("duplicate `{name}` statement (first on line {first})"));
                continue;
            }
            b.seen.push((name, line));
        }
        match kw.text {
            "pump" => {
                if cx.arity(kw, args, 1, "pump <H|V|D|A|R|L>") {
                    match Polarization::from_str(args[0].text) {
                        Ok(p) => b.pump = Some(Located::new(p, line)),
                        Err(e) => cx.error(args[0].column, e),
                    }
                }
            }
            "gp" => {
                if cx.arity(kw, args, 2, "gp <qwp|hwp> <deg>") {
                    let angle = cx.number(args[1]);
                    let el = match args[0].text {
                        "qwp" => angle.map(GpElement::Qwp),
                        "hwp" => angle.map(GpElement::Hwp),
                        other => {
                            cx.error(args[0].column, format!("unknown gp element `{other}` (expected qwp or hwp)"));
                            None
                        }
                    };
                    if let (Some(el), true) = (el, cx.ok) {
                        b.gp.push(Located::new(el, line));
                    }
                }
            }
            "source" => {
                let kv = cx.pairs("source", args, &["p", "v", "c"]);
                let get = |key: &str, cx: &mut Ctx| match lookup(&kv, key) {
                    Some(t) => cx.fraction(t, key),
                    None => {
                        cx.error(kw.column, format!("`source` needs {key}=<0..1>"));
                        None
                    }
                };
                let p = get("p", &mut cx);
                let v = get("v", &mut cx);
                let c = lookup(&kv, "c").map(|t| cx.fraction(t, "c"));
                if let (Some(p), Some(v), true) = (p, v, cx.ok) {
                    b.source = Some(Located::new(SourceSpec { p, v, c: c.flatten() }, line));
                }
            }
            "birefringence" => {
                let kv = cx.pairs("birefringence", args, &["phiH", "phiV"]);
                let get = |key: &str, cx: &mut Ctx| match lookup(&kv, key) {
                    Some(t) => cx.number(t),
                    None => {
                        cx.error(kw.column, format!("`birefringence` needs {key}=<deg>"));
                        None
                    }
                };
                let h = get("phiH", &mut cx);
                let v = get("phiV", &mut cx);
                if let (Some(phi_h_deg), Some(phi_v_deg), true) = (h, v, cx.ok) {
                    b.birefringence = Some(Located::new(Birefringence { phi_h_deg, phi_v_deg }, line));
                }
            }
            "imbalance" => {
                if args.is_empty() {
                    cx.error(kw.column, "expected `imbalance <deg>:<p> ...`");
                }
                let mut knots: Vec<(f64, f64)> = Vec::new();
                for tok in args {
                    let Some((angle, p)) = tok.text.split_once(':') else {
                        cx.error(tok.column, format!("expected <deg>:<p>, found `{}`", tok.text));
                        continue;
                    };
                    let angle_tok = Token { text: angle, column: tok.column };
                    let p_tok = Token {
                        text: p,
                        column: tok.column + angle.chars().count() + 1,
                    };
                    let (Some(theta), Some(p)) = (cx.number(angle_tok), cx.fraction(p_tok, "p")) else {
                        continue;
                    };
                    if knots.last().is_some_and(|&(prev, _)| theta <= prev) {
                        cx.error(tok.column, format!("knot angles must increase, {theta} follows {}", knots[knots.len() - 1].0));
                        continue;
                    }
                    knots.push((theta, p));
                }
                if cx.ok {
                    b.imbalance = Some(Located::new(knots, line));
                }
            }
            "detector" => {
                let kv = cx.pairs("detector", args, &["eta_s", "eta_i", "dark", "window", "pairs", "acq", "sampling"]);
                let mut d = DetectorSpec::default();
                for (key, tok) in kv {
                    if key == "sampling" {
                        match tok.text {
                            "poisson" => d.sampling = Sampling::Poisson,
                            "expected" => d.sampling = Sampling::Expected,
                            other => cx.error(tok.column, format!("unknown sampling `{other}` (expected poisson or expected)")),
                        }
                        continue;
                    }
                    let Some(x) = cx.number(tok) else { continue };
                    match key {
                        "eta_s" | "eta_i" => {
                            if !(0.0..=1.0).contains(&x) {
                                cx.error(tok.column, format!("{key} must lie in [0, 1], got {x}"));
                            } else if x > 0.9 {
                                cx.warn(tok.column, format!("{key} = {x} is unusually high for a photon counter"));
                            }
                            if key == "eta_s" {
                                d.eta_s = x;
                            } else {
                                d.eta_i = x;
                            }
                        }
                        "window" => {
                            if x < 0.0 {
                                cx.error(tok.column, "window must be non-negative");
                            } else if x > 100.0 {
                                cx.warn(tok.column, format!("window of {x} ns will be dominated by accidentals"));
                            }
                            d.window_ns = x;
                        }
                        "dark" | "pairs" => {
                            if x < 0.0 {
                                cx.error(tok.column, format!("{key} must be non-negative"));
                            }
                            if key == "dark" {
                                d.dark = x;
                            } else {
                                d.pairs = x;
                            }
                        }
                        _ => {
                            if x <= 0.0 {
                                cx.error(tok.column, "acq must be positive");
                            }
                            d.acq = x;
                        }
                    }
                }
                if cx.ok {
                    b.detector = Some(Located::new(d, line));
                }
            }
            "analyzer" => {
                let kv = cx.pairs("analyzer", args, &["signal"]);
                match lookup(&kv, "signal") {
                    Some(t) => match Polarization::from_str(t.text) {
                        Ok(p) if cx.ok => b.signal_analyzer = Some(Located::new(p, line)),
                        Ok(_) => {}
                        Err(e) => cx.error(t.column, e),
                    },
                    None if cx.ok => cx.error(kw.column, "`analyzer` needs signal=<H|V|D|A|R|L>"),
                    None => {}
                }
            }
            "scan" => {
                let usage = "scan <gp_hwp|analyzer_i_hwp> from <deg> to <deg> step <deg>";
                if cx.arity(kw, args, 7, usage) {
                    let target = match args[0].text {
                        "gp_hwp" => Some(ScanTarget::GpHwp),
                        "analyzer_i_hwp" => Some(ScanTarget::AnalyzerIHwp),
                        other => {
                            cx.error(args[0].column, format!("unknown scan target `{other}` (expected gp_hwp or analyzer_i_hwp)"));
                            None
                        }
                    };
                    for (i, word) in [(1, "from"), (3, "to"), (5, "step")] {
                        if args[i].text != word {
                            cx.error(args[i].column, format!("expected `{word}`, found `{}`", args[i].text));
                        }
                    }
                    let from = cx.number(args[2]);
                    let to = cx.number(args[4]);
                    let step = cx.number(args[6]);
                    if let Some(s) = step.filter(|&s| s <= 0.0) {
                        cx.error(args[6].column, format!("step must be positive, got {s}"));
                    }
                    if let (Some(f), Some(t)) = (from, to) {
                        if t < f {
                            cx.error(args[4].column, format!("empty scan range: {f} to {t}"));
                        }
                    }
                    if let (Some(target), Some(from), Some(to), Some(step), true) = (target, from, to, step, cx.ok) {
                        b.scan = Some(Located::new(ScanSpec { target, from, to, step }, line));
                    }
                }
            }
            "measure" => {
                if cx.arity(kw, args, 1, "measure <fringe|bell|tomo|classical>") {
                    let m = match args[0].text {
                        "fringe" => Some(MeasureKind::Fringe),
                        "bell" => Some(MeasureKind::Bell),
                        "tomo" => Some(MeasureKind::Tomo),
                        "classical" => Some(MeasureKind::Classical),
                        other => {
                            cx.error(args[0].column, format!("unknown measurement `{other}` (expected fringe, bell, tomo or classical)"));
                            None
                        }
                    };
                    b.measure = m.map(|m| Located::new(m, line));
                }
            }
            "seed" => {
                if cx.arity(kw, args, 1, "seed <u64>") {
                    match args[0].text.parse::<u64>() {
                        Ok(s) => b.seed = Some(Located::new(s, line)),
                        Err(_) => cx.error(args[0].column, format!("expected an unsigned integer seed, found `{}`", args[0].text)),
                    }
                }
            }
            other => cx.error(kw.column, format!("unknown statement `{other}`")),
        }
    }

    for name in ["pump", "source", "detector", "measure"] {
        if !b.seen.iter().any(|(n, _)| *n == name) {
            diags.push(ParseDiagnostic::error(0, 0, format!("{name} not declared")));
        }
    }
    sort_diagnostics(&mut diags);

    if diags.iter().any(ParseDiagnostic::is_error) {
        return Err(diags);
    }
    match (b.pump, b.source, b.detector, b.measure) {
        (Some(pump), Some(source), Some(detector), Some(measure)) => Ok(Parsed {
            program: BenchProgram {
                pump,
                gp: b.gp,
                source,
                birefringence: b.birefringence,
                imbalance: b.imbalance,
                detector,
                signal_analyzer: b.signal_analyzer,
                scan: b.scan,
                measure,
                seed: b.seed,
            },
            warnings: diags,
        }),
        _ => unreachable!("missing singletons are reported as errors"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::Severity;
    use proptest::prelude::*;

    const SETUP: &str = "\
# geometric phase CHSH scan
pump D
gp qwp 45
gp hwp 0
gp qwp 45
source p=0.5 v=1
detector eta_s=0.2 eta_i=0.2 dark=500 window=1.6 pairs=1e6 acq=1
scan gp_hwp from 0 to 90 step 2.5
measure bell
";

    fn errors(text: &str) -> Vec<ParseDiagnostic> {
        parse(text).expect_err("should not parse")
    }

    #[test]
    fn parses_the_reference_setup() {
        let p = parse(SETUP).unwrap();
        assert!(p.warnings.is_empty());
        let prog = p.program;
        assert_eq!(prog.pump.value, Polarization::D);
        assert_eq!(prog.gp.len(), 3);
        assert_eq!(prog.gp[1].value, GpElement::Hwp(0.0));
        assert_eq!(prog.detector.value.window_ns, 1.6);
        assert_eq!(prog.measure.value, MeasureKind::Bell);
        assert_eq!(prog.scan.unwrap().line, 8);
    }

    #[test]
    fn missing_pump_is_reported_at_line_zero() {
        let text = SETUP.replace("pump D\n", "");
        let d = errors(&text);
        assert_eq!(d, vec![ParseDiagnostic::error(0, 0, "pump not declared")]);
    }

    #[test]
    fn bad_number_points_at_token() {
        let text = SETUP.replace("gp hwp 0", "gp hwp ninety");
        let d = errors(&text);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].line, d[0].column), (4, 8));
        assert!(d[0].message.contains("ninety"));
    }

    #[test]
    fn collects_all_errors_in_order() {
        let text = "pump X\nfoo bar\nsource p=2 v=1\ndetector eta_s=0.2 bogus=1\nmeasure bell\nmeasure tomo\n";
        let d = errors(text);
        let at: Vec<(usize, usize)> = d.iter().map(|x| (x.line, x.column)).collect();
        assert_eq!(at, vec![(1, 6), (2, 1), (3, 10), (4, 20), (6, 1)]);
        assert!(d[4].message.contains("duplicate `measure`"));
        assert!(d.iter().all(|x| x.severity == Severity::Error));
    }

    #[test]
    fn grammar_error_classes() {
        let cases = [
            ("pump D D", 1, 8),
            ("gp zwp 10", 1, 4),
            ("gp hwp", 1, 1),
            ("source p=0.5", 1, 1),
            ("source p=0.5 v=1 v=1", 1, 18),
            ("source p=0.5 v", 1, 14),
            ("birefringence phiH=1", 1, 1),
            ("detector window=-1", 1, 17),
            ("detector acq=0", 1, 14),
            ("detector sampling=exact", 1, 19),
            ("scan gp_hwp from 0 to 90 by 2.5", 1, 26),
            ("scan gp_hwp from 0 to 90 step 0", 1, 31),
            ("scan gp_hwp from 90 to 0 step 1", 1, 24),
            ("scan polarizer from 0 to 90 step 1", 1, 6),
            ("measure spectrum", 1, 9),
            ("seed -4", 1, 6),
            ("analyzer idler=H", 1, 10),
        ];
        for (stmt, line, column) in cases {
            let text = format!("{stmt}\npump D\nsource p=0.5 v=1\ndetector\nmeasure bell\n");
            let d = errors(&text);
            assert!(d.iter().any(|x| (x.line, x.column) == (line, column)), "{stmt}: {d:?}");
        }
    }

    #[test]
    fn imbalance_knots() {
        let text = SETUP.replace("measure bell", "imbalance 0:0.5 45:0.68 90:0.5\nmeasure bell");
        let p = parse(&text).unwrap().program;
        assert_eq!(p.imbalance.as_ref().unwrap().value, vec![(0.0, 0.5), (45.0, 0.68), (90.0, 0.5)]);
        assert_eq!(parse(&p.to_string()).unwrap().program, p);
        for (stmt, column) in [
            ("imbalance", 1),
            ("imbalance 0-0.5", 11),
            ("imbalance x:0.5", 11),
            ("imbalance 0:1.5", 13),
            ("imbalance 10:0.5 5:0.6", 18),
        ] {
            let d = errors(&SETUP.replace("measure bell", &format!("{stmt}\nmeasure bell")));
            assert!(d.iter().any(|x| (x.line, x.column) == (9, column)), "{stmt}: {d:?}");
        }
    }

    #[test]
    fn odd_values_warn() {
        let text = SETUP.replace("eta_s=0.2", "eta_s=0.95").replace("window=1.6", "window=150");
        let p = parse(&text).unwrap();
        assert_eq!(p.warnings.len(), 2);
        assert!(p.warnings.iter().all(|w| w.severity == Severity::Warning));
        assert_eq!(p.warnings[0].column, 16);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = SETUP.replace("pump D", "pump D   # diagonal").replace("measure bell", "\n\n  measure bell");
        assert!(parse(&text).is_ok());
    }

    #[test]
    fn pretty_print_round_trips() {
        let p = parse(SETUP).unwrap().program;
        let again = parse(&p.to_string()).unwrap().program;
        assert_eq!(p, again);
    }

    fn arb_program() -> impl Strategy<Value = BenchProgram> {
        let pol = prop::sample::select(Polarization::ALL.to_vec());
        let el = prop_oneof![(-360.0f64..360.0).prop_map(GpElement::Qwp), (-360.0f64..360.0).prop_map(GpElement::Hwp)];
        let det = (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..1e4, 0.0f64..200.0, 0.0f64..1e7, 1e-3f64..100.0, any::<bool>())
            .prop_map(|(eta_s, eta_i, dark, window_ns, pairs, acq, exp)| DetectorSpec {
                eta_s,
                eta_i,
                dark,
                window_ns,
                pairs,
                acq,
                sampling: if exp { Sampling::Expected } else { Sampling::Poisson },
            });
        let scan = (any::<bool>(), -90.0f64..90.0, 0.0f64..180.0, 0.01f64..10.0).prop_map(|(g, from, len, step)| ScanSpec {
            target: if g { ScanTarget::GpHwp } else { ScanTarget::AnalyzerIHwp },
            from,
            to: from + len,
            step,
        });
        let knots = prop::collection::vec((0.1f64..30.0, 0.0f64..=1.0), 1..5).prop_map(|steps| {
            let mut theta = -10.0;
            steps
                .into_iter()
                .map(|(dt, p)| {
                    theta += dt;
                    (theta, p)
                })
                .collect::<Vec<_>>()
        });
        let measure = prop::sample::select(vec![MeasureKind::Fringe, MeasureKind::Bell, MeasureKind::Tomo, MeasureKind::Classical]);
        (
            (pol.clone(), prop::collection::vec(el, 0..5), 0.0f64..=1.0, 0.0f64..=1.0, prop::option::of(0.0f64..=1.0)),
            (prop::option::of((-720.0f64..720.0, -720.0f64..720.0)), det, prop::option::of(pol)),
            (prop::option::of(scan), measure, prop::option::of(any::<u64>()), prop::option::of(knots)),
        )
            .prop_map(|((pump, gp, p, v, c), (bire, detector, analyzer), (scan, measure, seed, imb))| BenchProgram {
                pump: Located::new(pump, 0),
                gp: gp.into_iter().map(|e| Located::new(e, 0)).collect(),
                source: Located::new(SourceSpec { p, v, c }, 0),
                birefringence: bire.map(|(phi_h_deg, phi_v_deg)| Located::new(Birefringence { phi_h_deg, phi_v_deg }, 0)),
                imbalance: imb.map(|k| Located::new(k, 0)),
                detector: Located::new(detector, 0),
                signal_analyzer: analyzer.map(|a| Located::new(a, 0)),
                scan: scan.map(|s| Located::new(s, 0)),
                measure: Located::new(measure, 0),
                seed: seed.map(|s| Located::new(s, 0)),
            })
    }

    proptest! {
        #[test]
        fn printed_programs_reparse_identically(prog in arb_program()) {
            let text = prog.to_string();
            let back = parse(&text).map_err(|d| TestCaseError::fail(format!("{d:?}\n{text}")))?.program;
            prop_assert_eq!(back, prog);
        }

        #[test]
        fn diagnostics_are_sorted(lines in prop::collection::vec("[a-z=0-9 .#-]{0,20}", 0..12)) {
            if let Err(d) = parse(&lines.join("\n")) {
                let keys: Vec<(usize, usize)> = d.iter().map(|x| (x.line, x.column)).collect();
                let mut sorted = keys.clone();
                sorted.sort();
                prop_assert_eq!(keys, sorted);
            }
        }
    }
}
