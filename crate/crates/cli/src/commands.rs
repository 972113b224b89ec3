use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::PathBuf;

use serde_json::{Map, Value};

use ptq_core::dynamics::{detect_revivals, detect_steady_state, propagate_strided, DEFAULT_DT};
use ptq_core::entanglement::{eigenstate_concurrence, eigenstate_concurrence_closed};
use ptq_core::ep::{locate_ep_with_gamma, DEFAULT_J_BRACKET, EP_TOL};
use ptq_core::sensing::{phase_boundaries, sensing_point, sensing_sweep_with_gamma, DEFAULT_STEP};
use ptq_core::spectrum::{classify_phase_default, closed_form_eigenvalues_unchecked, eigenvalues_qr, spectrum};
use ptq_core::{
    build_hamiltonian, initial_state, Eigenstate, EpPoint, EpSlice, Error, InitialStateSpec, Kappa, Result,
    SensingPoint, SpectrumSource, SystemParams, Trajectory, C64,
};

use crate::output::{phase_name, Cell, Dataset};

/// Steady-state detection window and tolerance used for every trajectory.
pub const STEADY_WINDOW: f64 = 5.0;
pub const STEADY_TOL: f64 = 1e-3;
pub const REVIVAL_WINDOW: f64 = 5.0;
const OMEGA_BRACKET: (f64, f64) = (0.01, 10.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5a,
    Fig5b,
    Fig6a,
    Fig6b,
    Fig7a,
    Fig7b,
    Fig8a,
    Fig8b,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3a => "fig3a",
            Figure::Fig3b => "fig3b",
            Figure::Fig4 => "fig4",
            Figure::Fig5a => "fig5a",
            Figure::Fig5b => "fig5b",
            Figure::Fig6a => "fig6a",
            Figure::Fig6b => "fig6b",
            Figure::Fig7a => "fig7a",
            Figure::Fig7b => "fig7b",
            Figure::Fig8a => "fig8a",
            Figure::Fig8b => "fig8b",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    EpLocate,
    EpCurve,
    Concurrence,
    Evolve,
    Revivals,
    Qfi,
    Sense,
    Reproduce(Figure),
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::EpLocate => "ep-locate",
            Command::EpCurve => "ep-curve",
            Command::Concurrence => "concurrence",
            Command::Evolve => "evolve",
            Command::Revivals => "revivals",
            Command::Qfi => "qfi",
            Command::Sense => "sense",
            Command::Reproduce(_) => "reproduce",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sweep {
    pub axis: Kappa,
    pub range: (f64, f64),
    pub n: usize,
}

impl Sweep {
    /// Grid values with both ends exact.
    pub fn values(&self) -> Vec<f64> {
        grid(self.range, self.n)
    }
}

pub fn grid(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range.0];
    }
    let step = (range.1 - range.0) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { range.1 } else { range.0 + step * i as f64 }).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DynamicsConfig {
    pub theta_init: f64,
    pub t_max: f64,
    pub dt: f64,
    /// Record every `stride`-th integration step.
    pub stride: usize,
}

/// Raw flag values; `None` means "not given".
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub omega: Option<f64>,
    pub j: Option<f64>,
    pub gamma: f64,
    pub theta: Option<f64>,
    pub tmax: Option<f64>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub sweep_axis: Option<Kappa>,
    pub sweep_range: Option<(f64, f64)>,
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    /// For sweeps the swept entry is a placeholder.
    pub params: SystemParams,
    pub sweep: Option<Sweep>,
    pub dynamics: Option<DynamicsConfig>,
    /// Grid size override for presets.
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn require(v: Option<f64>, flag: &str, command: Command) -> Result<f64> {
    v.ok_or_else(|| invalid(format!("{} needs --{flag}", command.name())))
}

impl RunConfig {
    /// Applies per-command defaults and checks that everything needed is present.
    pub fn resolve(command: Command, f: Flags) -> Result<Self> {
        if !f.gamma.is_finite() || f.gamma < 0.0 {
            return Err(invalid(format!("--gamma must be finite and >= 0, got {}", f.gamma)));
        }
        if f.n == Some(0) {
            return Err(invalid("--n must be at least 1"));
        }
        if let Some((a, b)) = f.sweep_range {
            if a > b {
                return Err(invalid(format!("--sweep-range needs a <= b, got {a}:{b}")));
            }
        }
        let format = f.format.unwrap_or_else(|| match f.out.as_ref().and_then(|p| p.extension()) {
            Some(ext) if ext == "json" => Format::Json,
            _ => Format::Csv,
        });
        let dynamics = |t_max_default: f64, stride_default: usize| -> Result<DynamicsConfig> {
            let d = DynamicsConfig {
                theta_init: f.theta.unwrap_or(FRAC_PI_2),
                t_max: f.tmax.unwrap_or(t_max_default),
                dt: f.dt.unwrap_or(DEFAULT_DT),
                stride: f.stride.unwrap_or(stride_default),
            };
            if d.dt <= 0.0 || d.t_max < d.dt {
                return Err(invalid(format!("need 0 < --dt <= --tmax, got dt={} tmax={}", d.dt, d.t_max)));
            }
            if d.stride == 0 {
                return Err(invalid("--stride must be at least 1"));
            }
            Ok(d)
        };

        let mut params = SystemParams::with_gamma(f.omega.unwrap_or(0.0), f.j.unwrap_or(0.0), f.gamma);
        let mut sweep = None;
        let mut dyn_cfg = None;
        match command {
            Command::Spectrum | Command::Concurrence | Command::Qfi | Command::Sense => {
                let axis = f.sweep_axis.unwrap_or(Kappa::J);
                if let Some(range) = f.sweep_range {
                    sweep = Some(Sweep { axis, range, n: f.n.unwrap_or(100) });
                    match axis {
                        Kappa::J => params.omega = require(f.omega, "omega", command)?,
                        Kappa::Omega => params.j = require(f.j, "j", command)?,
                    }
                } else {
                    params.omega = require(f.omega, "omega", command)?;
                    params.j = require(f.j, "j", command)?;
                    if matches!(command, Command::Qfi | Command::Sense) {
                        sweep = Some(Sweep { axis, range: (axis.get(&params), axis.get(&params)), n: 1 });
                    }
                }
            }
            Command::EpLocate => {
                let axis = f.sweep_axis.unwrap_or(Kappa::J);
                let range = f.sweep_range.unwrap_or(match axis {
                    Kappa::J => DEFAULT_J_BRACKET,
                    Kappa::Omega => OMEGA_BRACKET,
                });
                match axis {
                    Kappa::J => params.omega = require(f.omega, "omega", command)?,
                    Kappa::Omega => params.j = require(f.j, "j", command)?,
                }
                sweep = Some(Sweep { axis, range, n: 1 });
            }
            Command::EpCurve => {
                if f.sweep_axis == Some(Kappa::J) {
                    return Err(invalid("ep-curve is parameterised by omega; use --sweep-axis omega"));
                }
                let range = f.sweep_range.ok_or_else(|| invalid("ep-curve needs --sweep-range a:b over omega"))?;
                sweep = Some(Sweep { axis: Kappa::Omega, range, n: f.n.unwrap_or(50) });
            }
            Command::Evolve | Command::Revivals => {
                params.omega = require(f.omega, "omega", command)?;
                params.j = require(f.j, "j", command)?;
                dyn_cfg = Some(if command == Command::Evolve { dynamics(40.0, 1)? } else { dynamics(2000.0, 100)? });
            }
            Command::Reproduce(fig) => {
                // Presets carry their own parameters; only resolution flags apply.
                if f.omega.is_some() || f.j.is_some() || f.sweep_range.is_some() || f.sweep_axis.is_some() {
                    return Err(invalid(format!("reproduce {} fixes omega, j and the sweep", fig.name())));
                }
                match fig {
                    Figure::Fig4 => dyn_cfg = Some(dynamics(40.0, 10)?),
                    Figure::Fig5a | Figure::Fig5b => dyn_cfg = Some(dynamics(2000.0, 100)?),
                    Figure::Fig6a | Figure::Fig6b => dyn_cfg = Some(dynamics(200.0, 10)?),
                    _ => {}
                }
            }
        }
        params.validate()?;
        Ok(RunConfig { command, params, sweep, dynamics: dyn_cfg, n: f.n, out: f.out, format })
    }

    fn params_map(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("command".into(), self.command.name().into());
        if let Command::Reproduce(fig) = self.command {
            m.insert("figure".into(), fig.name().into());
        } else {
            let swept = self.sweep.filter(|s| s.n > 1 || self.command == Command::EpLocate).map(|s| s.axis);
            if swept != Some(Kappa::Omega) && self.command != Command::EpCurve {
                m.insert("omega".into(), self.params.omega.into());
            }
            if swept != Some(Kappa::J) && self.command != Command::EpCurve {
                m.insert("j".into(), self.params.j.into());
            }
            m.insert("gamma".into(), self.params.gamma.into());
            if let Some(s) = self.sweep.filter(|s| s.n > 1 || self.command != Command::Qfi && self.command != Command::Sense) {
                m.insert("sweep_axis".into(), s.axis.name().into());
                m.insert("sweep_range".into(), format!("{}:{}", s.range.0, s.range.1).into());
                if self.command != Command::EpLocate {
                    m.insert("n".into(), s.n.into());
                }
            }
        }
        if let Some(d) = self.dynamics {
            m.insert("theta".into(), d.theta_init.into());
            m.insert("tmax".into(), d.t_max.into());
            m.insert("dt".into(), d.dt.into());
            m.insert("stride".into(), d.stride.into());
        }
        m
    }
}

/// Executes the command. Per-point failures become diagnostics; a failure
/// that leaves nothing to report is returned as an error.
pub fn run(cfg: &RunConfig) -> Result<Dataset> {
    let pm = cfg.params_map();
    match cfg.command {
        Command::Spectrum => match cfg.sweep {
            None => spectrum_point(pm, &cfg.params),
            Some(s) => Ok(spectrum_sweep(pm, &cfg.params, s)),
        },
        Command::EpLocate => {
            let s = cfg.sweep.expect("resolved");
            let slice = match s.axis {
                Kappa::J => EpSlice::FixOmega(cfg.params.omega),
                Kappa::Omega => EpSlice::FixJ(cfg.params.j),
            };
            let ep = locate_ep_with_gamma(slice, s.range, EP_TOL, cfg.params.gamma)?;
            let mut d = Dataset::new(pm, EP_COLUMNS);
            d.meta("certificate", ep.check().err().unwrap_or_else(|| "ok".into()));
            d.push(ep_row(ep.omega_c, Some(&ep), None));
            Ok(d)
        }
        Command::EpCurve => ep_curve(pm, cfg.params.gamma, cfg.sweep.expect("resolved")),
        Command::Concurrence => {
            let points = match cfg.sweep {
                Some(s) => s.values().into_iter().map(|v| s.axis.set(&cfg.params, v)).collect(),
                None => vec![cfg.params],
            };
            Ok(concurrence_table(pm, &points))
        }
        Command::Evolve => evolve(pm, &cfg.params, cfg.dynamics.expect("resolved")),
        Command::Revivals => revivals(pm, &cfg.params, cfg.dynamics.expect("resolved")),
        Command::Qfi | Command::Sense => {
            let s = cfg.sweep.expect("resolved");
            let fixed = match s.axis {
                Kappa::J => cfg.params.omega,
                Kappa::Omega => cfg.params.j,
            };
            let points = if s.n == 1 {
                vec![sensing_point(&s.axis.set(&cfg.params, s.range.0), s.axis, DEFAULT_STEP)]
            } else {
                sensing_sweep_with_gamma(s.axis, fixed, s.range, s.n, cfg.params.gamma)?
            };
            Ok(sensing_table(pm, &points, s.axis, cfg.command == Command::Sense))
        }
        Command::Reproduce(fig) => reproduce(pm, fig, cfg),
    }
}

fn vector_columns() -> Vec<String> {
    ["00", "01", "10", "11"].iter().flat_map(|b| [format!("re_v{b}"), format!("im_v{b}")]).collect()
}

fn spectrum_point(pm: Map<String, Value>, p: &SystemParams) -> Result<Dataset> {
    let mut cols = vec!["label".to_string(), "re_e".into(), "im_e".into()];
    cols.extend(vector_columns());
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut d = Dataset::new(pm, &cols);
    let label = classify_phase_default(p);
    d.meta("phase", phase_name(label.phase));
    match spectrum(p) {
        Ok(s) => {
            d.meta(
                "source",
                match s.source {
                    SpectrumSource::ClosedForm => "closed_form",
                    SpectrumSource::Oracle => "oracle",
                },
            );
            d.meta_num("max_residual", Some(s.max_residual));
            for k in 0..4 {
                let e = s.eigenvalues[k];
                let mut row = vec![Cell::Text(format!("E{}", k + 1)), e.re.into(), e.im.into()];
                for a in s.eigenvectors[k].0 {
                    row.extend([a.re.into(), a.im.into()]);
                }
                d.push(row);
            }
        }
        Err(err) if !matches!(err, Error::InvalidArgument(_)) => {
            // Eigenvectors undefined (e.g. at an EP): report eigenvalues only.
            d.diagnose(None, &err);
            let e = eigenvalues_only(p)?;
            d.meta("source", "eigenvalues_only");
            for (k, e) in e.iter().enumerate() {
                let mut row = vec![Cell::Text(format!("E{}", k + 1)), e.re.into(), e.im.into()];
                row.extend(std::iter::repeat_n(Cell::Empty, 8));
                d.push(row);
            }
        }
        Err(err) => return Err(err),
    }
    d.meta_num("min_gap", Some(label.gap));
    Ok(d)
}

fn eigenvalues_only(p: &SystemParams) -> Result<[C64; 4]> {
    closed_form_eigenvalues_unchecked(p).or_else(|_| eigenvalues_qr(&build_hamiltonian(p)))
}

fn spectrum_sweep(pm: Map<String, Value>, base: &SystemParams, s: Sweep) -> Dataset {
    let mut d = Dataset::new(
        pm,
        &["omega", "j", "re_e1", "im_e1", "re_e2", "im_e2", "re_e3", "im_e3", "re_e4", "im_e4", "phase"],
    );
    for (i, v) in s.values().into_iter().enumerate() {
        let p = s.axis.set(base, v);
        let mut row = vec![p.omega.into(), p.j.into()];
        match eigenvalues_only(&p) {
            Ok(e) => row.extend(e.iter().flat_map(|z| [Cell::Num(z.re), Cell::Num(z.im)])),
            Err(err) => {
                d.diagnose(Some(i), &err);
                row.extend(std::iter::repeat_n(Cell::Empty, 8));
            }
        }
        row.push(classify_phase_default(&p).phase.into());
        d.push(row);
    }
    d
}

const EP_COLUMNS: &[&str] =
    &["omega_c", "j_c", "re_e", "im_e", "gap", "residual_theta", "residual_x", "higher_order", "failure"];

fn ep_row(omega: f64, ep: Option<&EpPoint>, failure: Option<String>) -> Vec<Cell> {
    match ep {
        Some(ep) => vec![
            ep.omega_c.into(),
            ep.j_c.into(),
            ep.e_degenerate.re.into(),
            ep.e_degenerate.im.into(),
            ep.gap.into(),
            ep.residual_theta.into(),
            ep.residual_x.into(),
            Cell::Int(ep.higher_order as i64),
            failure.into(),
        ],
        None => {
            let mut row = vec![omega.into()];
            row.extend(std::iter::repeat_n(Cell::Empty, 7));
            row.push(failure.into());
            row
        }
    }
}

fn ep_curve(pm: Map<String, Value>, gamma: f64, s: Sweep) -> Result<Dataset> {
    let mut d = Dataset::new(pm, EP_COLUMNS);
    let mut found = 0;
    for (i, omega) in s.values().into_iter().enumerate() {
        match locate_ep_with_gamma(EpSlice::FixOmega(omega), DEFAULT_J_BRACKET, EP_TOL, gamma) {
            Ok(ep) => {
                found += 1;
                d.push(ep_row(omega, Some(&ep), None));
            }
            Err(err) => {
                d.diagnose(Some(i), &err);
                d.push(ep_row(omega, None, Some(err.kind().to_string())));
            }
        }
    }
    if found == 0 {
        return Err(Error::EmptyCurve);
    }
    d.meta("j_bracket", format!("{}:{}", DEFAULT_J_BRACKET.0, DEFAULT_J_BRACKET.1));
    Ok(d)
}

fn concurrence_table(pm: Map<String, Value>, points: &[SystemParams]) -> Dataset {
    let mut d = Dataset::new(pm, &["omega", "j", "c3", "c4", "c3_closed", "c4_closed", "phase"]);
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![p.omega.into(), p.j.into()];
        let mut closed = Vec::new();
        for s in [Eigenstate::Psi3, Eigenstate::Psi4] {
            match eigenstate_concurrence(p, s) {
                Ok(c) => row.push(c.into()),
                Err(err) => {
                    d.diagnose(Some(i), &err);
                    row.push(Cell::Empty);
                }
            }
            closed.push(eigenstate_concurrence_closed(p, s).ok().map(|c| c.closed).into());
        }
        row.extend(closed);
        row.push(classify_phase_default(p).phase.into());
        d.push(row);
    }
    d
}

fn trajectory(p: &SystemParams, cfg: DynamicsConfig) -> Result<Trajectory> {
    let psi0 = initial_state(InitialStateSpec { theta_init: cfg.theta_init });
    propagate_strided(p, &psi0, cfg.t_max, cfg.dt, cfg.stride)
}

fn evolve(pm: Map<String, Value>, p: &SystemParams, cfg: DynamicsConfig) -> Result<Dataset> {
    let traj = trajectory(p, cfg)?;
    let mut d = Dataset::new(pm, &["t", "concurrence", "sigma_x1", "norm_log"]);
    d.meta("phase", phase_name(classify_phase_default(p).phase));
    d.meta_num("max_concurrence", Some(traj.max_concurrence()));
    let steady = detect_steady_state(&traj, STEADY_WINDOW, STEADY_TOL);
    d.meta_num("t_ss", steady.map(|s| s.0));
    d.meta_num("c_ss", steady.map(|s| s.1));
    for k in 0..traj.len() {
        d.push(vec![
            traj.times[k].into(),
            traj.concurrence[k].into(),
            traj.coherence_x[k].into(),
            traj.norm_log[k].into(),
        ]);
    }
    Ok(d)
}

fn revivals(pm: Map<String, Value>, p: &SystemParams, cfg: DynamicsConfig) -> Result<Dataset> {
    let traj = trajectory(p, cfg)?;
    let times = detect_revivals(&traj, REVIVAL_WINDOW);
    let mut d = Dataset::new(pm, &["index", "t_revival"]);
    d.meta("phase", phase_name(classify_phase_default(p).phase));
    d.meta_num("first_revival", times.first().copied());
    for (i, t) in times.iter().enumerate() {
        d.push(vec![(i + 1).into(), (*t).into()]);
    }
    Ok(d)
}

fn sensing_table(pm: Map<String, Value>, points: &[SensingPoint], axis: Kappa, variance: bool) -> Dataset {
    let mut cols = vec!["omega", "j", "phase", "qfi", "cr_bound"];
    if variance {
        cols.extend(["inverse_variance", "coherence"]);
    }
    cols.push("flag");
    let mut d = Dataset::new(pm, &cols);
    d.meta("kappa", axis.name());
    for sp in points {
        let (omega, j) = match axis {
            Kappa::J => (pm_fixed(&d, "omega"), sp.value),
            Kappa::Omega => (sp.value, pm_fixed(&d, "j")),
        };
        let mut row = vec![omega.into(), j.into(), sp.phase.into(), sp.qfi.into(), sp.cr_bound.into()];
        if variance {
            row.extend([sp.inverse_variance().into(), sp.coherence.into()]);
        }
        row.push(sp.flag.clone().into());
        d.push(row);
    }
    let boundaries: Vec<Value> =
        phase_boundaries(points).into_iter().map(|i| format!("{}:{}", points[i].value, points[i + 1].value).into()).collect();
    if points.len() > 1 {
        d.meta("phase_boundaries", if boundaries.is_empty() { Value::from("none") } else { boundaries.into() });
        let peak = points
            .iter()
            .filter_map(|p| p.qfi.map(|f| (p.value, f)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(v, _)| v);
        d.meta_num("qfi_peak_at", peak);
    }
    d
}

/// The fixed parameter of a sweep, as recorded in the params block.
fn pm_fixed(d: &Dataset, key: &str) -> f64 {
    d.params.get(key).and_then(Value::as_f64).unwrap_or(f64::NAN)
}

fn fixed_params(pm: &mut Map<String, Value>, omega: Option<f64>, j: Option<f64>, gamma: f64) {
    if let Some(w) = omega {
        pm.insert("omega".into(), w.into());
    }
    if let Some(j) = j {
        pm.insert("j".into(), j.into());
    }
    pm.insert("gamma".into(), gamma.into());
}

fn reproduce(mut pm: Map<String, Value>, fig: Figure, cfg: &RunConfig) -> Result<Dataset> {
    let gamma = cfg.params.gamma;
    match fig {
        Figure::Fig2 => {
            let n = cfg_n(cfg, 41);
            pm.insert("n".into(), n.into());
            pm.insert("j_range".into(), "0:1".into());
            pm.insert("omega_range".into(), "1:3".into());
            fixed_params(&mut pm, None, None, gamma);
            let mut d = Dataset::new(pm, &["j", "omega", "re_e3", "im_e3", "re_e4", "im_e4", "phase"]);
            for omega in grid((1.0, 3.0), n) {
                for j in grid((0.0, 1.0), n) {
                    let p = SystemParams::with_gamma(omega, j, gamma);
                    let mut row = vec![j.into(), omega.into()];
                    match closed_form_eigenvalues_unchecked(&p) {
                        Ok(e) => row.extend([e[2].re, e[2].im, e[3].re, e[3].im].map(Cell::Num)),
                        Err(err) => {
                            d.diagnose(Some(d.rows.len()), &err);
                            row.extend(std::iter::repeat_n(Cell::Empty, 4));
                        }
                    }
                    row.push(classify_phase_default(&p).phase.into());
                    d.push(row);
                }
            }
            Ok(d)
        }
        Figure::Fig3a | Figure::Fig3b => {
            let (axis, fixed, range) = match fig {
                Figure::Fig3a => (Kappa::J, 2.0, (0.3, 0.9)),
                _ => (Kappa::Omega, 0.3, (1.2, 2.2)),
            };
            let n = cfg_n(cfg, 200);
            let base = sweep_base(axis, fixed, gamma);
            let ep = locate_on(axis, fixed, range, gamma)?;
            pm.insert("sweep_axis".into(), axis.name().into());
            pm.insert("sweep_range".into(), format!("{}:{}", range.0, range.1).into());
            pm.insert("n".into(), n.into());
            fixed_params(&mut pm, (axis == Kappa::J).then_some(fixed), (axis == Kappa::Omega).then_some(fixed), gamma);
            let points: Vec<SystemParams> = grid(range, n).into_iter().map(|v| axis.set(&base, v)).collect();
            let mut d = concurrence_table(pm, &points);
            let (key, v) = ep_meta(axis, &ep);
            d.meta_num(key, Some(v));
            Ok(d)
        }
        Figure::Fig4 => {
            let runs = [("pts", SystemParams::with_gamma(2.0, 0.4, gamma)), ("ptb", SystemParams::with_gamma(2.0, 0.7, gamma))];
            multi_trajectory(pm, &runs, cfg.dynamics.expect("resolved"))
        }
        Figure::Fig5a => {
            let runs = [("j336", SystemParams::with_gamma(1.7, 0.336, gamma)), ("j337", SystemParams::with_gamma(1.7, 0.337, gamma))];
            multi_trajectory(pm, &runs, cfg.dynamics.expect("resolved"))
        }
        Figure::Fig5b => {
            let runs = [("w1902", SystemParams::with_gamma(1.902, 0.5, gamma)), ("w1901", SystemParams::with_gamma(1.901, 0.5, gamma))];
            multi_trajectory(pm, &runs, cfg.dynamics.expect("resolved"))
        }
        Figure::Fig6a | Figure::Fig6b => {
            // gamma is part of the preset here: Hermitian vs. non-Hermitian.
            let g = if fig == Figure::Fig6a { 0.0 } else { 1.1 };
            let p = SystemParams::with_gamma(1.5, 0.01, g);
            let d = cfg.dynamics.expect("resolved");
            let runs = [("theta_pi2", p, FRAC_PI_2), ("theta_pi4", p, FRAC_PI_4)];
            theta_trajectories(pm, &runs, d)
        }
        Figure::Fig7a | Figure::Fig7b | Figure::Fig8a | Figure::Fig8b => {
            let (axis, fixed, range) = match fig {
                Figure::Fig7a | Figure::Fig8a => (Kappa::Omega, 0.3, (1.4, 2.0)),
                Figure::Fig7b => (Kappa::J, 2.0, (0.3, 0.9)),
                _ => (Kappa::J, 1.7, (0.1, 0.6)),
            };
            let n = cfg_n(cfg, 200);
            if n < 2 {
                return Err(invalid("sensing sweeps need --n >= 2"));
            }
            let ep = locate_on(axis, fixed, range, gamma)?;
            pm.insert("sweep_axis".into(), axis.name().into());
            pm.insert("sweep_range".into(), format!("{}:{}", range.0, range.1).into());
            pm.insert("n".into(), n.into());
            fixed_params(&mut pm, (axis == Kappa::J).then_some(fixed), (axis == Kappa::Omega).then_some(fixed), gamma);
            let points = sensing_sweep_with_gamma(axis, fixed, range, n, gamma)?;
            let mut d = sensing_table(pm, &points, axis, matches!(fig, Figure::Fig8a | Figure::Fig8b));
            let (key, v) = ep_meta(axis, &ep);
            d.meta_num(key, Some(v));
            Ok(d)
        }
    }
}

fn cfg_n(cfg: &RunConfig, default: usize) -> usize {
    cfg.n.unwrap_or(default)
}

fn sweep_base(axis: Kappa, fixed: f64, gamma: f64) -> SystemParams {
    match axis {
        Kappa::J => SystemParams::with_gamma(fixed, 0.0, gamma),
        Kappa::Omega => SystemParams::with_gamma(0.0, fixed, gamma),
    }
}

fn locate_on(axis: Kappa, fixed: f64, range: (f64, f64), gamma: f64) -> Result<EpPoint> {
    let slice = match axis {
        Kappa::J => EpSlice::FixOmega(fixed),
        Kappa::Omega => EpSlice::FixJ(fixed),
    };
    locate_ep_with_gamma(slice, range, EP_TOL, gamma)
}

fn ep_meta(axis: Kappa, ep: &EpPoint) -> (&'static str, f64) {
    match axis {
        Kappa::J => ("j_c", ep.j_c),
        Kappa::Omega => ("omega_c", ep.omega_c),
    }
}

fn multi_trajectory(mut pm: Map<String, Value>, runs: &[(&str, SystemParams)], cfg: DynamicsConfig) -> Result<Dataset> {
    let runs: Vec<(&str, SystemParams, f64)> = runs.iter().map(|&(tag, p)| (tag, p, cfg.theta_init)).collect();
    for (tag, p, _) in &runs {
        pm.insert(format!("omega_{tag}"), p.omega.into());
        pm.insert(format!("j_{tag}"), p.j.into());
    }
    pm.insert("gamma".into(), runs[0].1.gamma.into());
    trajectories(pm, &runs, cfg)
}

fn theta_trajectories(mut pm: Map<String, Value>, runs: &[(&str, SystemParams, f64)], cfg: DynamicsConfig) -> Result<Dataset> {
    let p = runs[0].1;
    fixed_params(&mut pm, Some(p.omega), Some(p.j), p.gamma);
    pm.remove("theta");
    for (tag, _, theta) in runs {
        pm.insert(tag.to_string(), (*theta).into());
    }
    trajectories(pm, runs, cfg)
}

/// Concurrence of several runs on a shared time grid, plus per-run summary metadata.
fn trajectories(pm: Map<String, Value>, runs: &[(&str, SystemParams, f64)], cfg: DynamicsConfig) -> Result<Dataset> {
    let trajs = runs
        .iter()
        .map(|&(_, p, theta)| trajectory(&p, DynamicsConfig { theta_init: theta, ..cfg }))
        .collect::<Result<Vec<_>>>()?;
    let mut cols = vec!["t".to_string()];
    cols.extend(runs.iter().map(|(tag, ..)| format!("c_{tag}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut d = Dataset::new(pm, &cols);
    for ((tag, p, _), traj) in runs.iter().zip(&trajs) {
        d.meta(&format!("phase_{tag}"), phase_name(classify_phase_default(p).phase));
        d.meta_num(&format!("max_c_{tag}"), Some(traj.max_concurrence()));
        d.meta_num(&format!("t_c099_{tag}"), traj.first_time_reaching(0.99));
        let steady = detect_steady_state(traj, STEADY_WINDOW, STEADY_TOL);
        d.meta_num(&format!("c_ss_{tag}"), steady.map(|s| s.1));
        d.meta_num(&format!("first_revival_{tag}"), detect_revivals(traj, REVIVAL_WINDOW).first().copied());
    }
    for k in 0..trajs[0].len() {
        let mut row = vec![Cell::Num(trajs[0].times[k])];
        row.extend(trajs.iter().map(|t| Cell::Num(t.concurrence[k])));
        d.push(row);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Flags {
        Flags { gamma: 1.0, ..Flags::default() }
    }

    #[test]
    fn grid_has_exact_ends() {
        let g = grid((0.1, 0.7), 7);
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[6], 0.7);
        assert_eq!(grid((1.9, 1.9), 1), vec![1.9]);
    }

    #[test]
    fn missing_parameters_are_rejected() {
        let err = RunConfig::resolve(Command::Spectrum, Flags { omega: Some(1.0), ..flags() }).unwrap_err();
        assert!(!err.is_numerical());
        let ok = RunConfig::resolve(
            Command::Spectrum,
            Flags { omega: Some(1.0), sweep_range: Some((0.0, 1.0)), ..flags() },
        )
        .unwrap();
        assert_eq!(ok.sweep.unwrap().n, 100);
    }

    #[test]
    fn format_follows_extension() {
        let cfg = RunConfig::resolve(
            Command::Spectrum,
            Flags { omega: Some(1.0), j: Some(0.2), out: Some("x.json".into()), ..flags() },
        )
        .unwrap();
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn presets_reject_parameter_overrides() {
        let err = RunConfig::resolve(Command::Reproduce(Figure::Fig4), Flags { j: Some(0.1), ..flags() });
        assert!(err.is_err());
    }

    #[test]
    fn ep_locate_fix_j() {
        let cfg = RunConfig::resolve(
            Command::EpLocate,
            Flags { j: Some(0.3), sweep_axis: Some(Kappa::Omega), ..flags() },
        )
        .unwrap();
        let d = run(&cfg).unwrap();
        let Cell::Num(omega_c) = d.rows[0][0] else { panic!() };
        assert!((omega_c - 1.649).abs() < 2e-3, "{omega_c}");
    }
}
