//! Problem instances: a double integrator and a chaser approaching the capture
//! point of a spinning target in relative orbital motion, plus JSON loading.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::MpcConfig;
use crate::error::{Error, Result};
use crate::matrix::{
    decay_rate, expm_with_integral, from_rows, to_rows, verify_schur, Matrix, Vector, SCHUR_MAX_POWER,
};
use crate::sets::{BoxSet, HPolytope};

/// Earth gravitational parameter, km³/s².
pub const EARTH_MU_KM3_S2: f64 = 398_600.4418;
/// Earth equatorial radius, km.
pub const EARTH_RADIUS_KM: f64 = 6_378.137;

/// How the distance between final state and reference is reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DistanceMetric {
    /// 1-norm of the full state error.
    OneNorm,
    /// Euclidean norm of the first three (position) coordinates times a unit.
    PositionMeters { meters_per_unit: f64 },
}

impl DistanceMetric {
    pub fn distance(&self, x: &Vector, r: &Vector) -> f64 {
        let e = x - r;
        match self {
            DistanceMetric::OneNorm => e.iter().map(|v| v.abs()).sum(),
            DistanceMetric::PositionMeters { meters_per_unit } => {
                e.rows(0, 3).norm() * meters_per_unit
            }
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            DistanceMetric::OneNorm => "",
            DistanceMetric::PositionMeters { .. } => "m",
        }
    }
}

/// Geometry of the spinning target. Angles in radians, lengths in meters
/// unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RendezvousParams {
    pub altitude_km: f64,
    pub spin_period_s: f64,
    /// Maximum acceleration per axis, m/s².
    pub u_max: f64,
    pub theta_s: f64,
    pub cone_half_angle: f64,
    pub capture_radius_m: f64,
    pub docking_radius_m: f64,
    pub w_bar_p: f64,
    pub w_bar_v: f64,
    pub pole_set: Vec<f64>,
    /// Angle of the docking port direction in the radial–transverse plane at
    /// `k = 0`. `None` points it at the chaser's initial position.
    #[serde(default)]
    pub port_phase: Option<f64>,
}

impl Default for RendezvousParams {
    fn default() -> Self {
        RendezvousParams {
            altitude_km: 800.0,
            spin_period_s: 500.0,
            u_max: 0.02,
            theta_s: 0.0123,
            cone_half_angle: PI / 6.0,
            capture_radius_m: 1.7,
            docking_radius_m: 1.5,
            w_bar_p: 1e-6,
            w_bar_v: 5e-4,
            pole_set: vec![0.6, 0.6, 0.6, 0.5, 0.5, 0.5],
            port_phase: None,
        }
    }
}

impl RendezvousParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("altitude_km", self.altitude_km),
            ("spin_period_s", self.spin_period_s),
            ("u_max", self.u_max),
            ("theta_s", self.theta_s),
            ("cone_half_angle", self.cone_half_angle),
            ("capture_radius_m", self.capture_radius_m),
            ("docking_radius_m", self.docking_radius_m),
            ("w_bar_p", self.w_bar_p),
            ("w_bar_v", self.w_bar_v),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Scenario(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cone_half_angle >= PI / 2.0 {
            return Err(Error::Scenario("cone half-angle must be below pi/2".into()));
        }
        if self.pole_set.iter().any(|p| !(p.abs() < 1.0)) {
            return Err(Error::Scenario(format!(
                "pole set {:?} is not strictly inside the unit disk",
                self.pole_set
            )));
        }
        Ok(())
    }

    /// Orbit mean motion, rad/s.
    pub fn eta(&self) -> f64 {
        let r = EARTH_RADIUS_KM + self.altitude_km;
        (EARTH_MU_KM3_S2 / (r * r * r)).sqrt()
    }

    /// Meters per normalized position unit, `u_max / η²`.
    pub fn length_unit_m(&self) -> f64 {
        self.u_max / self.eta().powi(2)
    }

    /// Meters per second per normalized velocity unit, `u_max / η`.
    pub fn velocity_unit_m_s(&self) -> f64 {
        self.u_max / self.eta()
    }

    /// Spin rate in normalized time.
    pub fn omega_n(&self) -> f64 {
        (2.0 * PI / self.spin_period_s) / self.eta()
    }

    pub fn capture_radius(&self) -> f64 {
        self.capture_radius_m / self.length_unit_m()
    }

    pub fn docking_radius(&self) -> f64 {
        self.docking_radius_m / self.length_unit_m()
    }

    /// Samples per spin period (generally not an integer).
    pub fn samples_per_spin(&self) -> f64 {
        2.0 * PI / (self.omega_n() * self.theta_s)
    }
}

/// Spinning-target geometry after normalization, with the port phase resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinGeometry {
    pub params: RendezvousParams,
    pub phase0: f64,
}

impl SpinGeometry {
    pub fn new(params: RendezvousParams, x0: &[f64]) -> Self {
        let phase0 = params.port_phase.unwrap_or_else(|| x0[1].atan2(x0[0]));
        SpinGeometry { params, phase0 }
    }

    pub fn phase(&self, k: usize) -> f64 {
        self.phase0 + self.params.omega_n() * self.params.theta_s * k as f64
    }

    /// Unit docking direction in RTN coordinates.
    pub fn axis(&self, k: usize) -> Vector {
        let phi = self.phase(k);
        Vector::from_column_slice(&[phi.cos(), phi.sin(), 0.0])
    }

    pub fn port_position(&self, k: usize) -> Vector {
        self.axis(k) * self.params.docking_radius()
    }

    pub fn reference(&self, k: usize) -> Vector {
        let phi = self.phase(k);
        let rho = self.params.capture_radius();
        let w = self.params.omega_n();
        Vector::from_column_slice(&[
            rho * phi.cos(),
            rho * phi.sin(),
            0.0,
            -rho * w * phi.sin(),
            rho * w * phi.cos(),
            0.0,
        ])
    }

    /// Four half-spaces on the position block: square cross-section inside the
    /// visibility cone with apex at the docking port.
    pub fn cone(&self, k: usize) -> HPolytope {
        let axis = self.axis(k);
        let c = self.params.cone_half_angle.tan() / 2f64.sqrt();
        let t1 = Vector::from_column_slice(&[-axis[1], axis[0], 0.0]);
        let t2 = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
        let mut normals = Vec::with_capacity(4);
        let mut offsets = Vec::with_capacity(4);
        for t in [t1.clone(), -t1, t2.clone(), -t2] {
            let a3 = &t - &axis * c;
            let mut a = Vector::zeros(6);
            a.rows_mut(0, 3).copy_from(&a3);
            normals.push(a);
            offsets.push(-c * self.params.docking_radius());
        }
        HPolytope { normals, offsets }
    }
}

pub fn reference_trajectory(geometry: &SpinGeometry, k: usize) -> Vector {
    geometry.reference(k)
}

pub fn cone_constraint(geometry: &SpinGeometry, k: usize) -> HPolytope {
    geometry.cone(k)
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateSchedule {
    Constant(HPolytope),
    Cone(SpinGeometry),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSchedule {
    Constant(Vector),
    Spinning(SpinGeometry),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub a: Matrix,
    pub b: Matrix,
    pub w: BoxSet,
    pub gain: Matrix,
    pub state_constraints: StateSchedule,
    pub input_constraints: HPolytope,
    pub reference: ReferenceSchedule,
    pub config: MpcConfig,
    pub x0: Option<Vector>,
    /// Box that initial states are drawn from in Monte Carlo campaigns.
    pub sampling: Option<BoxSet>,
    pub distance: DistanceMetric,
    pub state_names: Vec<String>,
    pub caveats: Vec<String>,
    pub rendezvous: Option<RendezvousParams>,
}

impl Scenario {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn closed_loop(&self) -> Matrix {
        &self.a + &self.b * &self.gain
    }

    pub fn state_set(&self, k: usize) -> HPolytope {
        match &self.state_constraints {
            StateSchedule::Constant(p) => p.clone(),
            StateSchedule::Cone(g) => g.cone(k),
        }
    }

    pub fn input_set(&self, _k: usize) -> HPolytope {
        self.input_constraints.clone()
    }

    pub fn reference_at(&self, k: usize) -> Vector {
        match &self.reference {
            ReferenceSchedule::Constant(r) => r.clone(),
            ReferenceSchedule::Spinning(g) => g.reference(k),
        }
    }

    pub fn distance_to_reference(&self, x: &Vector, k: usize) -> f64 {
        self.distance.distance(x, &self.reference_at(k))
    }

    /// Dimension and stability checks shared by every constructor.
    pub fn validate(&self) -> Result<()> {
        let n = self.a.nrows();
        let m = self.b.ncols();
        if !self.a.is_square() {
            return Err(Error::Scenario(format!("A must be square, got {}x{}", n, self.a.ncols())));
        }
        if self.b.nrows() != n {
            return Err(Error::Scenario(format!("B must have {n} rows, got {}", self.b.nrows())));
        }
        if self.gain.nrows() != m || self.gain.ncols() != n {
            return Err(Error::Scenario(format!(
                "gain must be {m}x{n}, got {}x{}",
                self.gain.nrows(),
                self.gain.ncols()
            )));
        }
        if self.w.dim() != n {
            return Err(Error::Scenario(format!("disturbance box must have {n} coordinates")));
        }
        if self.state_set(0).dim() != n {
            return Err(Error::Scenario("state constraint dimension mismatch".into()));
        }
        if self.input_constraints.dim() != m {
            return Err(Error::Scenario("input constraint dimension mismatch".into()));
        }
        if self.reference_at(0).len() != n {
            return Err(Error::Scenario("reference dimension mismatch".into()));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != n {
                return Err(Error::Scenario(format!("initial state must have {n} entries")));
            }
        }
        if let Some(s) = &self.sampling {
            if s.dim() != n {
                return Err(Error::Scenario(format!("sampling box must have {n} coordinates")));
            }
        }
        if !verify_schur(&self.closed_loop(), SCHUR_MAX_POWER) {
            return Err(Error::Scenario("A + B K is not Schur stable".into()));
        }
        self.config.validate()?;
        Ok(())
    }
}

pub fn make_double_integrator() -> Scenario {
    let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let b = Matrix::from_row_slice(2, 1, &[0.0, 1.0]);
    Scenario {
        name: "double_integrator".into(),
        a,
        b,
        w: BoxSet::symmetric(&[0.1, 0.4]).expect("valid box"),
        gain: Matrix::from_row_slice(1, 2, &[-0.06, -0.5]),
        state_constraints: StateSchedule::Constant(
            BoxSet::symmetric(&[25.0, 2.0]).expect("valid box").to_hpolytope(),
        ),
        input_constraints: BoxSet::symmetric(&[2.0]).expect("valid box").to_hpolytope(),
        reference: ReferenceSchedule::Constant(Vector::zeros(2)),
        config: MpcConfig {
            gamma_z: 0.02,
            gamma_v: 1.0,
            ..MpcConfig::default()
        },
        x0: Some(Vector::from_column_slice(&[20.0, 0.0])),
        sampling: Some(BoxSet::symmetric(&[25.0, 2.0]).expect("valid box")),
        distance: DistanceMetric::OneNorm,
        state_names: vec!["position".into(), "velocity".into()],
        caveats: Vec::new(),
        rendezvous: None,
    }
}

/// Tube gain for the default rendezvous parameters, placing the closed-loop
/// poles at {0.6, 0.6, 0.6, 0.5, 0.5, 0.5} with a diagonalizable `A + B K`.
/// Computed offline; validated at load time.
pub const RENDEZVOUS_GAIN: [[f64; 6]; 3] = [
    [
        -1.3248477719435928e+03,
        1.6259547623336374e+01,
        4.5742323061897839e-14,
        -6.5051309971283715e+01,
        -1.2333594719469241e+00,
        8.4752873608630901e-16,
    ],
    [
        -1.6260162601626430e+01,
        -1.3218977748432387e+03,
        -3.3592527332152994e-14,
        1.2332863510408814e+00,
        -6.5037780507814631e+01,
        -8.2954557775123597e-16,
    ],
    [
        -9.7276254442138992e-15,
        -1.9042118067427905e-13,
        -1.3209811059493268e+03,
        -2.2074461584889928e-16,
        -4.8411404914087923e-15,
        -6.5036140357913965e+01,
    ],
];

pub const RENDEZVOUS_X0: [f64; 6] = [-2.1857e-3, 0.5464e-3, 0.0, 0.0, 0.0, 0.0];

pub const RENDEZVOUS_CAVEAT: &str = "The published Monte Carlo medians for this case (97 cm adaptive, 6 cm fixed) \
contradict the published single-run, minimum and maximum figures for the same experiment; \
they are read as transposed (6 cm adaptive, 97 cm fixed).";

/// Normalized relative-motion matrices in the radial–transverse–normal frame.
pub fn hcw_continuous() -> (Matrix, Matrix) {
    let mut ac = Matrix::zeros(6, 6);
    ac[(0, 3)] = 1.0;
    ac[(1, 4)] = 1.0;
    ac[(2, 5)] = 1.0;
    ac[(3, 0)] = 3.0;
    ac[(3, 4)] = 2.0;
    ac[(4, 3)] = -2.0;
    ac[(5, 2)] = -1.0;
    let mut bc = Matrix::zeros(6, 3);
    bc[(3, 0)] = 1.0;
    bc[(4, 1)] = 1.0;
    bc[(5, 2)] = 1.0;
    (ac, bc)
}

pub fn make_rendezvous(params: &RendezvousParams, gain: Matrix, x0: Vector) -> Result<Scenario> {
    params.validate()?;
    if x0.len() != 6 {
        return Err(Error::Scenario("rendezvous initial state must have 6 entries".into()));
    }
    let (ac, bc) = hcw_continuous();
    let (a, b) = expm_with_integral(&ac, &bc, params.theta_s)?;
    let (p, v) = (params.w_bar_p, params.w_bar_v);
    let geometry = SpinGeometry::new(params.clone(), x0.as_slice());
    let meters = params.length_unit_m();
    let pos = 50.0 / meters;
    let normal = 5.0 / meters;
    let scenario = Scenario {
        name: "rendezvous".into(),
        a,
        b,
        w: BoxSet::symmetric(&[p, p, p, v, v, v])?,
        gain,
        state_constraints: StateSchedule::Cone(geometry.clone()),
        input_constraints: BoxSet::symmetric(&[1.0, 1.0, 1.0])?.to_hpolytope(),
        reference: ReferenceSchedule::Spinning(geometry),
        config: MpcConfig {
            gamma_z: 100.0,
            gamma_v: 1.0,
            ..MpcConfig::default()
        },
        x0: Some(x0),
        sampling: Some(BoxSet::new(
            vec![-pos, -pos, -normal, 0.0, 0.0, 0.0],
            vec![pos, pos, normal, 0.0, 0.0, 0.0],
        )?),
        distance: DistanceMetric::PositionMeters {
            meters_per_unit: meters,
        },
        state_names: ["radial", "transverse", "normal", "v_radial", "v_transverse", "v_normal"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        caveats: vec![RENDEZVOUS_CAVEAT.to_string()],
        rendezvous: Some(params.clone()),
    };
    validate_gain_poles(&scenario.closed_loop(), &params.pole_set)?;
    Ok(scenario)
}

pub fn make_default_rendezvous() -> Scenario {
    let gain = from_rows(&RENDEZVOUS_GAIN.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
        .expect("finite gain");
    make_rendezvous(
        &RendezvousParams::default(),
        gain,
        Vector::from_column_slice(&RENDEZVOUS_X0),
    )
    .expect("shipped rendezvous scenario is valid")
}

/// Checks a configured gain against its intended pole set: Schur stable, and
/// the observed norm decay rate no faster-growing than the largest pole allows.
pub fn validate_gain_poles(ak: &Matrix, poles: &[f64]) -> Result<()> {
    if !verify_schur(ak, SCHUR_MAX_POWER) {
        return Err(Error::Scenario("configured gain does not make A + B K Schur stable".into()));
    }
    if let Some(max_pole) = poles.iter().map(|p| p.abs()).reduce(f64::max) {
        let rate = decay_rate(ak, SCHUR_MAX_POWER)?;
        if rate > max_pole + 0.05 {
            return Err(Error::Scenario(format!(
                "closed-loop decay rate {rate:.4} is inconsistent with the largest requested pole {max_pole}"
            )));
        }
    }
    Ok(())
}

// JSON scenario files.

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxSpec {
    fn to_box(&self, what: &str) -> Result<BoxSet> {
        BoxSet::new(self.lower.clone(), self.upper.clone())
            .map_err(|e| Error::Scenario(format!("{what}: {e}")))
    }

    fn from_box(b: &BoxSet) -> Self {
        BoxSpec {
            lower: b.lower.clone(),
            upper: b.upper.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicsSpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub state: BoxSpec,
    pub input: BoxSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioFile {
    Linear {
        name: String,
        dynamics: DynamicsSpec,
        disturbance: BoxSpec,
        constraints: ConstraintSpec,
        #[serde(default)]
        reference: Option<Vec<f64>>,
        cost: MpcConfig,
        gain: Vec<Vec<f64>>,
        #[serde(default)]
        initial_state: Option<Vec<f64>>,
        #[serde(default)]
        sampling: Option<BoxSpec>,
        #[serde(default)]
        state_names: Vec<String>,
        #[serde(default)]
        caveats: Vec<String>,
    },
    Rendezvous {
        name: String,
        rendezvous: RendezvousParams,
        cost: MpcConfig,
        gain: Vec<Vec<f64>>,
        initial_state: Vec<f64>,
        #[serde(default)]
        sampling: Option<BoxSpec>,
        #[serde(default)]
        caveats: Vec<String>,
    },
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let scenario = match self {
            ScenarioFile::Linear {
                name,
                dynamics,
                disturbance,
                constraints,
                reference,
                cost,
                gain,
                initial_state,
                sampling,
                state_names,
                caveats,
            } => {
                let a = from_rows(&dynamics.a).map_err(|e| Error::Scenario(format!("A: {e}")))?;
                let b = from_rows(&dynamics.b).map_err(|e| Error::Scenario(format!("B: {e}")))?;
                let n = a.nrows();
                let reference = reference.unwrap_or_else(|| vec![0.0; n]);
                Scenario {
                    name,
                    a,
                    b,
                    w: disturbance.to_box("disturbance")?,
                    gain: from_rows(&gain).map_err(|e| Error::Scenario(format!("gain: {e}")))?,
                    state_constraints: StateSchedule::Constant(
                        constraints.state.to_box("state constraints")?.to_hpolytope(),
                    ),
                    input_constraints: constraints.input.to_box("input constraints")?.to_hpolytope(),
                    reference: ReferenceSchedule::Constant(Vector::from_vec(reference)),
                    config: cost,
                    x0: initial_state.map(Vector::from_vec),
                    sampling: sampling.map(|s| s.to_box("sampling")).transpose()?,
                    distance: DistanceMetric::OneNorm,
                    state_names,
                    caveats,
                    rendezvous: None,
                }
            }
            ScenarioFile::Rendezvous {
                name,
                rendezvous,
                cost,
                gain,
                initial_state,
                sampling,
                caveats,
            } => {
                let gain = from_rows(&gain).map_err(|e| Error::Scenario(format!("gain: {e}")))?;
                let mut s = make_rendezvous(&rendezvous, gain, Vector::from_vec(initial_state))?;
                s.name = name;
                s.config = cost;
                if let Some(b) = sampling {
                    s.sampling = Some(b.to_box("sampling")?);
                }
                s.caveats = caveats;
                s
            }
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Inverse of [`ScenarioFile::into_scenario`] for the built-in scenarios.
    pub fn from_scenario(s: &Scenario) -> Result<ScenarioFile> {
        if let Some(params) = &s.rendezvous {
            return Ok(ScenarioFile::Rendezvous {
                name: s.name.clone(),
                rendezvous: params.clone(),
                cost: s.config.clone(),
                gain: to_rows(&s.gain),
                initial_state: s
                    .x0
                    .as_ref()
                    .map(|x| x.iter().copied().collect())
                    .unwrap_or_else(|| vec![0.0; 6]),
                sampling: s.sampling.as_ref().map(BoxSpec::from_box),
                caveats: s.caveats.clone(),
            });
        }
        let StateSchedule::Constant(state) = &s.state_constraints else {
            return Err(Error::Scenario("only box state constraints serialize".into()));
        };
        let (Some(state_box), Some(input_box)) = (state.as_axis_box(), s.input_constraints.as_axis_box()) else {
            return Err(Error::Scenario("only box constraints serialize".into()));
        };
        Ok(ScenarioFile::Linear {
            name: s.name.clone(),
            dynamics: DynamicsSpec {
                a: to_rows(&s.a),
                b: to_rows(&s.b),
            },
            disturbance: BoxSpec::from_box(&s.w),
            constraints: ConstraintSpec {
                state: BoxSpec {
                    lower: state_box.0,
                    upper: state_box.1,
                },
                input: BoxSpec {
                    lower: input_box.0,
                    upper: input_box.1,
                },
            },
            reference: Some(s.reference_at(0).iter().copied().collect()),
            cost: s.config.clone(),
            gain: to_rows(&s.gain),
            initial_state: s.x0.as_ref().map(|x| x.iter().copied().collect()),
            sampling: s.sampling.as_ref().map(BoxSpec::from_box),
            state_names: s.state_names.clone(),
            caveats: s.caveats.clone(),
        })
    }
}

pub fn parse_scenario(json: &str) -> Result<Scenario> {
    let file: ScenarioFile =
        serde_json::from_str(json).map_err(|e| Error::Scenario(format!("invalid scenario JSON: {e}")))?;
    file.into_scenario()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text).map_err(|e| match e {
        Error::Scenario(msg) => Error::Scenario(format!("{}: {msg}", path.display())),
        other => other,
    })
}
