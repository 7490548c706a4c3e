use super::{BenchProgram, GpElement, MeasureKind, ParseDiagnostic, ScanTarget};
use crate::counting::{angle_grid, DetectorModel};
use crate::measurement::AnalyzerSetting;
use crate::polarization::{half_wave_plate, quarter_wave_plate, JonesMatrix, JonesVector, Polarization};
use crate::source::{emitted_state, ImbalanceProfile, PumpState, SourceImperfection};
use crate::state::DensityMatrix;

/// One configuration of the GP stack and the state it produces.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanPoint {
    /// Angle of the single GP half-wave plate, when there is one.
    pub gp_hwp_deg: Option<f64>,
    pub transfer: JonesMatrix,
    pub pump_out: JonesVector,
    pub state: DensityMatrix,
}

/// Everything a driver needs, with angles converted to radians.
#[derive(Clone, Debug, PartialEq)]
pub struct RunPlan {
    pub measure: MeasureKind,
    pub points: Vec<PlanPoint>,
    /// Idler HWP angles (radians) for fringe scans, empty otherwise.
    pub analyzer_sweep: Vec<f64>,
    pub signal_analyzer: AnalyzerSetting,
    pub detector: DetectorModel,
    pub imperfection: SourceImperfection,
    pub imbalance: Option<ImbalanceProfile>,
    pub birefringence: Option<(f64, f64)>,
    pub seed: Option<u64>,
}

fn element_matrix(el: GpElement) -> JonesMatrix {
    match el {
        GpElement::Qwp(a) => quarter_wave_plate(a.to_radians()),
        GpElement::Hwp(a) => half_wave_plate(a.to_radians()),
    }
}

/// Product of the elements in beam order (the first listed acts first).
pub fn fold_elements(elements: &[GpElement]) -> JonesMatrix {
    elements
        .iter()
        .fold(JonesMatrix::identity(), |acc, &el| element_matrix(el) * acc)
}

/// Lowers a parsed program into a [`RunPlan`], reporting semantic errors at
/// the offending statement.
pub fn compile(program: &BenchProgram) -> Result<RunPlan, Vec<ParseDiagnostic>> {
    let mut diags = Vec::new();
    let measure = program.measure.value;
    let hwp_slots: Vec<usize> = program
        .gp
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e.value, GpElement::Hwp(_)))
        .map(|(i, _)| i)
        .collect();

    let scan = program.scan.as_ref();
    match (measure, scan.map(|s| s.value.target)) {
        (MeasureKind::Fringe, Some(ScanTarget::AnalyzerIHwp)) => {}
        (MeasureKind::Fringe, _) => diags.push(ParseDiagnostic::error(
            program.measure.line,
            1,
            "`measure fringe` needs `scan analyzer_i_hwp ...`",
        )),
        (_, Some(ScanTarget::AnalyzerIHwp)) => diags.push(ParseDiagnostic::error(
            scan.map_or(0, |s| s.line),
            1,
            format!("`measure {}` cannot scan the idler analyzer; scan gp_hwp instead", measure.keyword()),
        )),
        _ => {}
    }
    if let Some(s) = scan.filter(|s| s.value.target == ScanTarget::GpHwp) {
        if hwp_slots.len() != 1 {
            diags.push(ParseDiagnostic::error(
                s.line,
                1,
                format!("`scan gp_hwp` needs exactly one `gp hwp` element, found {}", hwp_slots.len()),
            ));
        }
    }

    let s = &program.source.value;
    let mut imperfection = SourceImperfection::default();
    imperfection.amplitude_p = s.p;
    imperfection.werner_v = s.v;
    imperfection.coherence = s.c.unwrap_or(1.0);
    let birefringence = program
        .birefringence
        .as_ref()
        .map(|b| (b.value.phi_h_deg.to_radians(), b.value.phi_v_deg.to_radians()));
    let imbalance = match &program.imbalance {
        Some(knots) => {
            let radians = knots.value.iter().map(|&(t, p)| (t.to_radians(), p)).collect();
            match ImbalanceProfile::new(radians) {
                Ok(prof) => Some(prof),
                Err(e) => {
                    diags.push(ParseDiagnostic::error(knots.line, 1, e.to_string()));
                    None
                }
            }
        }
        None => None,
    };
    if let Some(knots) = program.imbalance.as_ref().filter(|_| hwp_slots.len() != 1) {
        diags.push(ParseDiagnostic::error(
            knots.line,
            1,
            format!("`imbalance` follows the `gp hwp` angle and needs exactly one, found {}", hwp_slots.len()),
        ));
    }
    let detector = program.detector.value.model();
    if let Err(e) = detector.validate() {
        diags.push(ParseDiagnostic::error(program.detector.line, 1, e.to_string()));
    }
    if !diags.is_empty() {
        return Err(diags);
    }

    let elements: Vec<GpElement> = program.gp.iter().map(|e| e.value).collect();
    let grid = |spec: &super::ScanSpec| {
        angle_grid(spec.from, spec.to, spec.step).expect("scan range checked by the parser")
    };
    let configurations: Vec<(Option<f64>, Vec<GpElement>)> = match scan.map(|s| &s.value) {
        Some(spec) if spec.target == ScanTarget::GpHwp => grid(spec)
            .into_iter()
            .map(|theta| {
                let mut els = elements.clone();
                els[hwp_slots[0]] = GpElement::Hwp(theta);
                (Some(theta), els)
            })
            .collect(),
        _ => {
            let theta = match hwp_slots.as_slice() {
                [i] => match elements[*i] {
                    GpElement::Hwp(a) => Some(a),
                    GpElement::Qwp(_) => None,
                },
                _ => None,
            };
            vec![(theta, elements.clone())]
        }
    };

    let pump_in = program.pump.value.jones();
    let mut points = Vec::with_capacity(configurations.len());
    for (gp_hwp_deg, els) in configurations {
        let transfer = fold_elements(&els);
        let pump_out = transfer.apply(&pump_in);
        let mut imp = imperfection;
        if let (Some(prof), Some(theta)) = (&imbalance, gp_hwp_deg) {
            imp.amplitude_p = prof.at(theta.to_radians());
        }
        let state = PumpState::new(pump_out, 1.0).and_then(|pump| emitted_state(&pump, &imp, birefringence));
        match state {
            Ok(state) => points.push(PlanPoint {
                gp_hwp_deg,
                transfer,
                pump_out,
                state,
            }),
            Err(e) => {
                return Err(vec![ParseDiagnostic::error(program.source.line, 1, format!("cannot build the source state: {e}"))]);
            }
        }
    }

    let analyzer_sweep = match scan.map(|s| &s.value) {
        Some(spec) if spec.target == ScanTarget::AnalyzerIHwp => grid(spec).into_iter().map(f64::to_radians).collect(),
        _ => Vec::new(),
    };
    let signal = program.signal_analyzer.as_ref().map_or(Polarization::H, |a| a.value);
    Ok(RunPlan {
        measure,
        points,
        analyzer_sweep,
        signal_analyzer: AnalyzerSetting::labeled(signal),
        detector,
        imperfection,
        imbalance,
        birefringence,
        seed: program.seed.as_ref().map(|s| s.value),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::parse;
    use crate::polarization::{qhq_transfer, GpSetup};
    use crate::state::{fidelity_mixed, gp_state};

    const BASE: &str = "pump D\ngp qwp 45\ngp hwp 0\ngp qwp 45\nsource p=0.5 v=1\ndetector window=1.6\n";

    fn plan(extra: &str) -> Result<RunPlan, Vec<ParseDiagnostic>> {
        compile(&parse(&format!("{BASE}{extra}")).unwrap().program)
    }

    #[test]
    fn stack_compiles_to_transfer_matrix() {
        let p = plan("scan gp_hwp from 0 to 90 step 2.5\nmeasure bell\n").unwrap();
        assert_eq!(p.points.len(), 37);
        for pt in &p.points {
            let theta = pt.gp_hwp_deg.unwrap().to_radians();
            let (dev, _) = pt.transfer.diff_up_to_global_phase(&qhq_transfer(GpSetup::new(theta)));
            assert!(dev < 1e-12);
            let f = fidelity_mixed(&pt.state, &gp_state(2.0 * theta)).unwrap();
            assert!((f - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_stack_is_identity() {
        assert_eq!(fold_elements(&[]), JonesMatrix::identity());
        let p = compile(&parse("pump D\nsource p=0.5 v=1\ndetector\nmeasure classical\n").unwrap().program).unwrap();
        assert_eq!(p.points.len(), 1);
        assert_eq!(p.points[0].transfer, JonesMatrix::identity());
        assert_eq!(p.points[0].gp_hwp_deg, None);
    }

    #[test]
    fn semantic_errors_are_located() {
        let e = plan("scan analyzer_i_hwp from 0 to 180 step 5\nmeasure tomo\n").unwrap_err();
        assert_eq!((e[0].line, e[0].column), (7, 1));
        let e = plan("measure fringe\n").unwrap_err();
        assert_eq!(e[0].line, 7);
        let e = compile(
            &parse("pump D\ngp hwp 0\ngp hwp 10\nsource p=0.5 v=1\ndetector\nscan gp_hwp from 0 to 10 step 1\nmeasure bell\n")
                .unwrap()
                .program,
        )
        .unwrap_err();
        assert_eq!(e[0].line, 6);
        assert!(e[0].message.contains("found 2"));
    }

    #[test]
    fn fringe_plan_has_sweep() {
        let p = plan("analyzer signal=D\nscan analyzer_i_hwp from 0 to 180 step 5\nmeasure fringe\nseed 3\n").unwrap();
        assert_eq!(p.analyzer_sweep.len(), 37);
        assert_eq!(p.signal_analyzer.label, Some(Polarization::D));
        assert_eq!(p.seed, Some(3));
        assert_eq!(p.points.len(), 1);
    }

    #[test]
    fn imbalance_follows_the_stack_angle() {
        use crate::state::{binary_entropy, entanglement_entropy};
        let text = format!("{BASE}imbalance 0:0.5 45:0.68\nscan gp_hwp from 0 to 90 step 22.5\nmeasure tomo\n");
        let plan = compile(&parse(&text).unwrap().program).unwrap();
        let entropies: Vec<f64> = plan.points.iter().map(|p| entanglement_entropy(&p.state).unwrap()).collect();
        let want = [0.5, 0.59, 0.68, 0.68, 0.68].map(binary_entropy);
        for (got, want) in entropies.iter().zip(want) {
            assert!((got - want).abs() < 1e-12, "{entropies:?}");
        }
        let no_hwp = format!("{}imbalance 0:0.5\nmeasure tomo\n", BASE.replace("gp hwp 0\n", ""));
        let diags = compile(&parse(&no_hwp).unwrap().program).unwrap_err();
        assert!(diags[0].message.contains("imbalance"));
    }

    #[test]
    fn compilation_is_pure() {
        let text = format!("{BASE}scan gp_hwp from 0 to 45 step 5\nmeasure tomo\n");
        let a = compile(&parse(&text).unwrap().program).unwrap();
        let b = compile(&parse(&text).unwrap().program).unwrap();
        assert_eq!(a, b);
    }
}
