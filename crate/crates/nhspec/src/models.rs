//! Band models and probe Hamiltonians.
//!
//! Two lattice models are provided. The modified Rice-Mele chain
//! ([`MrmParams`]) has Bloch components
//!
//! ```text
//! J_x = J1 + J2 cos k,   J_y = J2 sin k,   J_z = J3 sin k + m_z,
//! ```
//!
//! and uniform loss `gamma` on the second sublattice. The two-harmonic link
//! model ([`LkParams`]) couples first and second Bloch harmonics and can
//! braid its bands into a Hopf link. Both reduce at each quasimomentum to the
//! same generic two-band form ([`TwoBandParams`])
//!
//! ```text
//! H(k) = [[0, c], [c, d]],   c >= 0 real,   d complex,
//! ```
//!
//! with closed-form energies `E± = d/2 ± sqrt(d^2/4 + c^2)`.
//!
//! The absorption probe weakly couples the first sublattice to an auxiliary
//! level at detuning `delta`, giving the 3x3 non-Hermitian probe Hamiltonian
//! of [`full_hamiltonian`]. The full hardware-level description, including
//! the excited state that generates the loss and the optional dephasing of
//! the auxiliary level, is the six-level open system of [`SixLevelConfig`].

use crate::linalg::{order_pair, CMat};
use crate::{Error, Result};
use num_complex::Complex64 as C64;

/// Excited-state linewidth used when nothing else is specified, in rad/us.
pub const DEFAULT_GAMMA_E: f64 = 123.0;

fn require_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {value}")))
    }
}

/// Modified Rice-Mele chain parameters. All couplings in rad/us.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrmParams {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub mz: f64,
    /// Sublattice loss rate, must be non-negative.
    pub gamma: f64,
}

impl MrmParams {
    pub fn new(j1: f64, j2: f64, j3: f64, mz: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("j1", j1), ("j2", j2), ("j3", j3), ("mz", mz), ("gamma", gamma)] {
            require_finite(name, v)?;
        }
        if gamma < 0.0 {
            return Err(Error::InvalidInput(format!(
                "loss rate gamma must be non-negative, got {gamma}"
            )));
        }
        Ok(Self { j1, j2, j3, mz, gamma })
    }
}

/// Two-harmonic link model parameters. All couplings in rad/us.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkParams {
    pub mx: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    /// Uniform loss scale entering `Im d`, must be non-negative.
    pub gamma0: f64,
}

impl LkParams {
    pub fn new(mx: f64, g1: f64, g2: f64, g3: f64, gamma0: f64) -> Result<Self> {
        for (name, v) in [("mx", mx), ("g1", g1), ("g2", g2), ("g3", g3), ("gamma0", gamma0)] {
            require_finite(name, v)?;
        }
        if gamma0 < 0.0 {
            return Err(Error::InvalidInput(format!(
                "loss scale gamma0 must be non-negative, got {gamma0}"
            )));
        }
        Ok(Self { mx, g1, g2, g3, gamma0 })
    }
}

/// Generic two-band Bloch Hamiltonian at a single quasimomentum:
/// `[[0, c], [c, d]]` with real coupling `c >= 0` and complex on-site
/// term `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBandParams {
    pub c: f64,
    pub d: C64,
    /// Quasimomentum this reduction was taken at, kept for bookkeeping.
    pub k: f64,
}

impl TwoBandParams {
    pub fn new(c: f64, d: C64, k: f64) -> Result<Self> {
        require_finite("c", c)?;
        require_finite("k", k)?;
        if !d.is_finite() {
            return Err(Error::InvalidInput(format!("d must be finite, got {d}")));
        }
        if c < 0.0 {
            return Err(Error::InvalidInput(format!("coupling c must be non-negative, got {c}")));
        }
        Ok(Self { c, d, k })
    }
}

/// Absorption probe settings: coupling strength `omega` to the auxiliary
/// level, detuning `delta`, interrogation time `t` (us), and initial
/// auxiliary population `n0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub omega: f64,
    pub delta: f64,
    pub t: f64,
    pub n0: f64,
}

impl ProbeConfig {
    pub fn new(omega: f64, delta: f64, t: f64, n0: f64) -> Result<Self> {
        require_finite("omega", omega)?;
        require_finite("delta", delta)?;
        require_finite("t", t)?;
        require_finite("n0", n0)?;
        if omega < 0.0 {
            return Err(Error::InvalidInput(format!(
                "probe omega must be non-negative, got {omega}"
            )));
        }
        if t < 0.0 {
            return Err(Error::InvalidInput(format!("probe time must be non-negative, got {t}")));
        }
        if !(0.0..=1.0).contains(&n0) {
            return Err(Error::InvalidInput(format!("n0 must lie in [0, 1], got {n0}")));
        }
        Ok(Self { omega, delta, t, n0 })
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }
}

impl Default for ProbeConfig {
    /// The weak-probe working point: omega = 0.019 rad/us, zero detuning,
    /// 200 us interrogation, fully prepared auxiliary level.
    fn default() -> Self {
        Self { omega: 0.019, delta: 0.0, t: 200.0, n0: 1.0 }
    }
}

/// Evaluate the modified Rice-Mele reduction at quasimomentum `k`.
///
/// `c = sqrt(J_x^2 + J_y^2)` and `d = -2 (J_z + i gamma)`.
pub fn mrm_at_k(p: &MrmParams, k: f64) -> Result<TwoBandParams> {
    require_finite("k", k)?;
    let jx = p.j1 + p.j2 * k.cos();
    let jy = p.j2 * k.sin();
    let jz = p.j3 * k.sin() + p.mz;
    let c = (jx * jx + jy * jy).sqrt();
    let d = C64::new(-2.0 * jz, -2.0 * p.gamma);
    TwoBandParams::new(c, d, k)
}

/// Evaluate the link-model reduction at quasimomentum `k`.
///
/// `c = m_x` and `d = 2 [g1 cos k + g2 cos 2k + i (g3 sin 2k - gamma0/2)]`.
pub fn lk_at_k(p: &LkParams, k: f64) -> Result<TwoBandParams> {
    require_finite("k", k)?;
    let re = 2.0 * (p.g1 * k.cos() + p.g2 * (2.0 * k).cos());
    let im = 2.0 * (p.g3 * (2.0 * k).sin() - 0.5 * p.gamma0);
    TwoBandParams::new(p.mx.abs(), C64::new(re, im), k)
}

/// The 2x2 Bloch Hamiltonian `[[0, c], [c, d]]`.
pub fn two_band_matrix(tb: &TwoBandParams) -> CMat {
    let c = C64::new(tb.c, 0.0);
    CMat::from_rows(2, &[C64::ZERO, c, c, tb.d]).expect("2 is an allowed dimension")
}

/// Closed-form complex band energies `E± = d/2 ± sqrt(d^2/4 + c^2)`,
/// ordered descending by real part (ties by imaginary part).
pub fn closed_form_energies(tb: &TwoBandParams) -> (C64, C64) {
    let half_d = 0.5 * tb.d;
    let root = (half_d * half_d + C64::new(tb.c * tb.c, 0.0)).sqrt();
    order_pair(half_d + root, half_d - root)
}

/// The 3x3 effective probe Hamiltonian in the basis (site 0, site 1,
/// auxiliary):
///
/// ```text
/// [[ 0,    c,  omega/2 ],
///  [ c,    d,  0       ],
///  [ omega/2, 0, -delta ]]
/// ```
///
/// Non-Hermiticity enters only through `Im d`.
pub fn full_hamiltonian(tb: &TwoBandParams, probe: &ProbeConfig) -> CMat {
    let c = C64::new(tb.c, 0.0);
    let half_omega = C64::new(0.5 * probe.omega, 0.0);
    let neg_delta = C64::new(-probe.delta, 0.0);
    CMat::from_rows(
        3,
        &[
            C64::ZERO, c, half_omega,
            c, tb.d, C64::ZERO,
            half_omega, C64::ZERO, neg_delta,
        ],
    )
    .expect("3 is an allowed dimension")
}

/// Six-level open-system description of one probed quasimomentum.
///
/// Basis ordering: ground qubit states |0>, |1>, shelving states |2>, |3>,
/// excited state |e>, auxiliary state |a> (indices 0..=5). The Hermitian
/// Hamiltonian is
///
/// ```text
/// H = (J_x - i J_y)|0><1| + h.c. - 2 J_z |1><1|
///   + omega/2 (|0><a| + h.c.) - delta |a><a|
///   + J_L (|1><e| + h.c.)
/// ```
///
/// and dissipation acts through jump operators `L_mu = sqrt(Gamma_mu)
/// |mu><e|` for mu = 1, 2, 3 plus, optionally, auxiliary-level dephasing
/// `L_phi = sqrt(Gamma_phi) |a><a|`.
///
/// The branching rates must sum to `gamma_e`. Eliminating |e> adiabatically
/// leaves loss `gamma = J_L^2 / (2 gamma_e)` on site |1>, which is what
/// [`effective_gamma`](Self::effective_gamma) reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixLevelConfig {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub omega: f64,
    pub delta: f64,
    /// Coupling from |1> to the excited state.
    pub jl: f64,
    /// Excited-state linewidth.
    pub gamma_e: f64,
    /// Decay rates from |e> into |1>, |2>, |3>; must sum to `gamma_e`.
    pub branching: [f64; 3],
    /// Optional dephasing rate of the auxiliary level (1 / t2).
    pub dephasing_rate: Option<f64>,
}

impl SixLevelConfig {
    pub fn new(
        jx: f64,
        jy: f64,
        jz: f64,
        omega: f64,
        delta: f64,
        jl: f64,
        gamma_e: f64,
        branching: [f64; 3],
        dephasing_rate: Option<f64>,
    ) -> Result<Self> {
        for (name, v) in [
            ("jx", jx),
            ("jy", jy),
            ("jz", jz),
            ("omega", omega),
            ("delta", delta),
            ("jl", jl),
            ("gamma_e", gamma_e),
        ] {
            require_finite(name, v)?;
        }
        if omega < 0.0 {
            return Err(Error::InvalidInput(format!(
                "probe omega must be non-negative, got {omega}"
            )));
        }
        if jl < 0.0 {
            return Err(Error::InvalidInput(format!("jl must be non-negative, got {jl}")));
        }
        if gamma_e <= 0.0 {
            return Err(Error::InvalidInput(format!("gamma_e must be positive, got {gamma_e}")));
        }
        let sum: f64 = branching.iter().sum();
        if branching.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidInput(format!(
                "branching rates must be non-negative and finite, got {branching:?}"
            )));
        }
        if (sum - gamma_e).abs() > 1e-9 * gamma_e.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "branching rates must sum to gamma_e = {gamma_e}, got sum {sum}"
            )));
        }
        if let Some(rate) = dephasing_rate {
            require_finite("dephasing_rate", rate)?;
            if rate < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "dephasing rate must be non-negative, got {rate}"
                )));
            }
        }
        Ok(Self { jx, jy, jz, omega, delta, jl, gamma_e, branching, dephasing_rate })
    }

    /// Build the configuration for one quasimomentum of a Rice-Mele chain,
    /// with the excited-state decay split equally among the three branches.
    pub fn from_mrm(
        p: &MrmParams,
        k: f64,
        probe: &ProbeConfig,
        jl: f64,
        gamma_e: f64,
    ) -> Result<Self> {
        require_finite("k", k)?;
        let jx = p.j1 + p.j2 * k.cos();
        let jy = p.j2 * k.sin();
        let jz = p.j3 * k.sin() + p.mz;
        let third = gamma_e / 3.0;
        Self::new(
            jx,
            jy,
            jz,
            probe.omega,
            probe.delta,
            jl,
            gamma_e,
            [third, third, third],
            None,
        )
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn with_dephasing(self, rate: Option<f64>) -> Self {
        Self { dephasing_rate: rate, ..self }
    }

    /// Loss rate on |1> left behind when |e> is eliminated adiabatically:
    /// `jl^2 / (2 gamma_e)`.
    pub fn effective_gamma(&self) -> f64 {
        self.jl * self.jl / (2.0 * self.gamma_e)
    }

    /// The two-band reduction this configuration should reproduce once the
    /// excited state is eliminated: `c = sqrt(jx^2 + jy^2)`,
    /// `d = -2 (jz + i gamma_eff)`.
    pub fn effective_two_band(&self, k: f64) -> Result<TwoBandParams> {
        let c = (self.jx * self.jx + self.jy * self.jy).sqrt();
        TwoBandParams::new(c, C64::new(-2.0 * self.jz, -2.0 * self.effective_gamma()), k)
    }

    /// The Hermitian 6x6 Hamiltonian.
    pub fn hamiltonian(&self) -> CMat {
        let mut h = CMat::zeros(6).expect("6 is an allowed dimension");
        let hop = C64::new(self.jx, -self.jy);
        h.set(0, 1, hop);
        h.set(1, 0, hop.conj());
        h.set(1, 1, C64::new(-2.0 * self.jz, 0.0));
        let half_omega = C64::new(0.5 * self.omega, 0.0);
        h.set(0, 5, half_omega);
        h.set(5, 0, half_omega);
        h.set(5, 5, C64::new(-self.delta, 0.0));
        let jl = C64::new(self.jl, 0.0);
        h.set(1, 4, jl);
        h.set(4, 1, jl);
        h
    }

    /// The jump operators: three excited-state decay channels and, when
    /// dephasing is configured, the auxiliary-level dephasing operator.
    pub fn jump_operators(&self) -> Vec<CMat> {
        let mut ops = Vec::with_capacity(4);
        for (channel, rate) in self.branching.iter().enumerate() {
            let mut l = CMat::zeros(6).expect("6 is an allowed dimension");
            // |e> decays into |1>, |2>, |3> (indices 1..=3).
            l.set(channel + 1, 4, C64::new(rate.sqrt(), 0.0));
            ops.push(l);
        }
        if let Some(rate) = self.dephasing_rate {
            let mut l = CMat::zeros(6).expect("6 is an allowed dimension");
            l.set(5, 5, C64::new(rate.sqrt(), 0.0));
            ops.push(l);
        }
        ops
    }
}

/// Hamiltonian and jump operators of a six-level configuration, as a pair.
pub fn six_level_system(cfg: &SixLevelConfig) -> (CMat, Vec<CMat>) {
    (cfg.hamiltonian(), cfg.jump_operators())
}
