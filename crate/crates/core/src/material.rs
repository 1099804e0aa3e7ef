//! Pointwise constitutive relations.
//!
//! Plane strain uses the volumetric/deviatoric tension-compression split: the
//! tensile volumetric energy and all deviatoric energy are degraded by
//! `(1 - d)^2 + k_res`, compressive volumetric energy is not. The deviator is
//! the full 3D one with `eps_zz = 0`. Voigt vectors carry engineering shear
//! `g_xy = 2 eps_xy`, so the shear entry of the stress is `mu * g_xy`.
//!
//! The anti-plane variant has a single displacement component `u_z`; its
//! energy `mu/2 |grad u_z|^2` is degraded as a whole.

use crate::error::{Error, Result};

/// Residual stiffness used unless a configuration overrides it.
pub const DEFAULT_K_RES: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    PlaneStrainVector,
    AntiPlaneScalar,
}

impl ModelKind {
    pub fn dofs_per_node(self) -> usize {
        match self {
            ModelKind::PlaneStrainVector => 2,
            ModelKind::AntiPlaneScalar => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub youngs: f64,
    pub poisson: f64,
    pub shear: f64,
    pub bulk: f64,
    /// Critical energy release rate (the average value when anisotropic).
    pub gc: f64,
    /// Phase-field length scale.
    pub ell: f64,
    pub k_res: f64,
    /// Anisotropy strength in `[0, 1]`.
    pub xi: f64,
    /// Weakest material angle in radians.
    pub beta: f64,
    pub kind: ModelKind,
}

impl MaterialParams {
    pub fn plane_strain(youngs: f64, poisson: f64, gc: f64, ell: f64) -> Result<Self> {
        let m = MaterialParams {
            youngs,
            poisson,
            shear: youngs / (2.0 * (1.0 + poisson)),
            bulk: youngs / (3.0 * (1.0 - 2.0 * poisson)),
            gc,
            ell,
            k_res: DEFAULT_K_RES,
            xi: 0.0,
            beta: 0.0,
            kind: ModelKind::PlaneStrainVector,
        };
        m.validate()?;
        Ok(m)
    }

    /// Anti-plane shear material. Only `shear` enters the energy; the other
    /// elastic constants are filled in for `nu = 0`.
    pub fn anti_plane(shear: f64, gc: f64, ell: f64) -> Result<Self> {
        let youngs = 2.0 * shear;
        let m = MaterialParams {
            youngs,
            poisson: 0.0,
            shear,
            bulk: youngs / 3.0,
            gc,
            ell,
            k_res: DEFAULT_K_RES,
            xi: 0.0,
            beta: 0.0,
            kind: ModelKind::AntiPlaneScalar,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_anisotropy(mut self, xi: f64, beta: f64) -> Result<Self> {
        self.xi = xi;
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_residual_stiffness(mut self, k_res: f64) -> Result<Self> {
        self.k_res = k_res;
        self.validate()?;
        Ok(self)
    }

    /// Copy with a different critical energy release rate.
    pub fn with_gc(mut self, gc: f64) -> Self {
        self.gc = gc;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidMaterial(msg));
        if !(self.youngs > 0.0) {
            return fail(format!("Young's modulus must be positive, got {}", self.youngs));
        }
        if !(self.poisson > -1.0 && self.poisson < 0.5) {
            return fail(format!("Poisson's ratio must lie in (-1, 0.5), got {}", self.poisson));
        }
        if !(self.shear > 0.0) || !(self.bulk > 0.0) {
            return fail("shear and bulk moduli must be positive".into());
        }
        if self.kind == ModelKind::PlaneStrainVector {
            let mu = self.youngs / (2.0 * (1.0 + self.poisson));
            let k = self.youngs / (3.0 * (1.0 - 2.0 * self.poisson));
            if (mu - self.shear).abs() > 1e-9 * mu || (k - self.bulk).abs() > 1e-9 * k {
                return fail("shear/bulk moduli inconsistent with (E, nu)".into());
            }
        }
        if !(self.gc > 0.0) || !(self.ell > 0.0) {
            return fail(format!(
                "Gc and ell must be positive, got Gc = {}, ell = {}",
                self.gc, self.ell
            ));
        }
        if !(self.k_res >= 0.0 && self.k_res < 1e-2) {
            return fail(format!("residual stiffness must be small and >= 0, got {}", self.k_res));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return fail(format!("anisotropy strength must lie in [0, 1], got {}", self.xi));
        }
        if !self.beta.is_finite() {
            return fail("weakest material angle must be finite".into());
        }
        Ok(())
    }

    /// Degradation factor `(1 - d)^2 + k_res`.
    pub fn degradation(&self, d: f64) -> f64 {
        (1.0 - d) * (1.0 - d) + self.k_res
    }

    /// Metric `A` of the surface gradient term, `grad d . A grad d`.
    ///
    /// Identity when isotropic; eigenvalues `1 +- xi` otherwise.
    pub fn gradient_metric(&self) -> [[f64; 2]; 2] {
        let c = (2.0 * self.beta).cos();
        let s = (2.0 * self.beta).sin();
        [
            [1.0 + self.xi * c, -self.xi * s],
            [-self.xi * s, 1.0 - self.xi * c],
        ]
    }

    /// Plane-strain modulus `E / (1 - nu^2)`.
    pub fn plane_strain_modulus(&self) -> f64 {
        self.youngs / (1.0 - self.poisson * self.poisson)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VoigtStrain {
    pub xx: f64,
    pub yy: f64,
    /// Engineering shear strain.
    pub xy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VoigtStress {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl VoigtStrain {
    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        VoigtStrain { xx, yy, xy }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// In-plane deviator components `(dev_xx, dev_yy, dev_xy)` as tensor entries.
    fn deviator(&self) -> [f64; 3] {
        let m = self.trace() / 3.0;
        [self.xx - m, self.yy - m, 0.5 * self.xy]
    }

    /// Squared Frobenius norm of the 3D deviator (`eps_zz = 0`).
    pub fn deviator_norm_sq(&self) -> f64 {
        let [dx, dy, dxy] = self.deviator();
        let dz = -self.trace() / 3.0;
        dx * dx + dy * dy + dz * dz + 2.0 * dxy * dxy
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.xx, self.yy, self.xy]
    }
}

impl VoigtStress {
    pub fn as_array(&self) -> [f64; 3] {
        [self.xx, self.yy, self.xy]
    }

    /// Largest in-plane principal value.
    pub fn max_principal(&self) -> f64 {
        let mean = 0.5 * (self.xx + self.yy);
        let radius = (0.25 * (self.xx - self.yy).powi(2) + self.xy * self.xy).sqrt();
        mean + radius
    }
}

/// Tensile and compressive energy densities `(psi_plus, psi_minus)`.
pub fn psi_split(eps: &VoigtStrain, mat: &MaterialParams) -> (f64, f64) {
    let tr = eps.trace();
    let dev = mat.shear * eps.deviator_norm_sq();
    if tr >= 0.0 {
        (0.5 * mat.bulk * tr * tr + dev, 0.0)
    } else {
        (dev, 0.5 * mat.bulk * tr * tr)
    }
}

/// Stress for phase value `d`.
pub fn stress(eps: &VoigtStrain, d: f64, mat: &MaterialParams) -> VoigtStress {
    stress_degraded(eps, mat.degradation(d), mat)
}

/// Stress with an explicit degradation factor applied to the tensile part.
pub fn stress_degraded(eps: &VoigtStrain, g: f64, mat: &MaterialParams) -> VoigtStress {
    let tr = eps.trace();
    let [dx, dy, dxy] = eps.deviator();
    let two_mu = 2.0 * mat.shear;
    let (vol_plus, vol_minus) = if tr >= 0.0 {
        (mat.bulk * tr, 0.0)
    } else {
        (0.0, mat.bulk * tr)
    };
    VoigtStress {
        xx: g * (vol_plus + two_mu * dx) + vol_minus,
        yy: g * (vol_plus + two_mu * dy) + vol_minus,
        xy: g * two_mu * dxy,
    }
}

/// Consistent tangent for phase value `d`.
pub fn tangent(eps: &VoigtStrain, d: f64, mat: &MaterialParams) -> [[f64; 3]; 3] {
    tangent_degraded(eps, mat.degradation(d), mat)
}

/// Consistent tangent `d sigma / d eps` with an explicit degradation factor.
/// The tie `tr eps = 0` is routed to the tensile branch.
pub fn tangent_degraded(eps: &VoigtStrain, g: f64, mat: &MaterialParams) -> [[f64; 3]; 3] {
    let tensile = eps.trace() >= 0.0;
    let k = mat.bulk;
    let mu = mat.shear;
    // 2 mu times the Voigt deviatoric projector for engineering shear
    let dev = [
        [4.0 / 3.0 * mu, -2.0 / 3.0 * mu, 0.0],
        [-2.0 / 3.0 * mu, 4.0 / 3.0 * mu, 0.0],
        [0.0, 0.0, mu],
    ];
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let vol = if i < 2 && j < 2 { k } else { 0.0 };
            let (vp, vm) = if tensile { (vol, 0.0) } else { (0.0, vol) };
            c[i][j] = g * (vp + dev[i][j]) + vm;
        }
    }
    c
}

/// Surface energy density, isotropic or anisotropic depending on `mat.xi`.
pub fn surface_energy_density(d: f64, grad_d: [f64; 2], mat: &MaterialParams) -> f64 {
    let a = mat.gradient_metric();
    let quad = grad_d[0] * (a[0][0] * grad_d[0] + a[0][1] * grad_d[1])
        + grad_d[1] * (a[1][0] * grad_d[0] + a[1][1] * grad_d[1]);
    mat.gc * (d * d + mat.ell * mat.ell * quad) / (2.0 * mat.ell)
}

/// Anti-plane energy density and degraded shear stress vector `(psi_plus, tau)`.
pub fn antiplane_psi(grad_uz: [f64; 2], d: f64, mat: &MaterialParams) -> (f64, [f64; 2]) {
    let g = mat.degradation(d);
    let psi = 0.5 * mat.shear * (grad_uz[0] * grad_uz[0] + grad_uz[1] * grad_uz[1]);
    (psi, [g * mat.shear * grad_uz[0], g * mat.shear * grad_uz[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_moduli() -> MaterialParams {
        MaterialParams {
            youngs: 9.0 / 4.0,
            poisson: 0.125,
            shear: 1.0,
            bulk: 1.0,
            gc: 1.0,
            ell: 1.0,
            k_res: 0.0,
            xi: 0.0,
            beta: 0.0,
            kind: ModelKind::PlaneStrainVector,
        }
    }

    fn energy(eps: &VoigtStrain, d: f64, mat: &MaterialParams) -> f64 {
        let (p, m) = psi_split(eps, mat);
        mat.degradation(d) * p + m
    }

    #[test]
    fn split_of_zero_strain_is_zero() {
        assert_eq!(psi_split(&VoigtStrain::default(), &unit_moduli()), (0.0, 0.0));
    }

    #[test]
    fn split_uniaxial_tension_and_compression() {
        let mat = unit_moduli();
        let (p, m) = psi_split(&VoigtStrain::new(1.0, 0.0, 0.0), &mat);
        assert!((p - 7.0 / 6.0).abs() < 1e-15);
        assert_eq!(m, 0.0);
        let (p, m) = psi_split(&VoigtStrain::new(-1.0, 0.0, 0.0), &mat);
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
        assert!((m - 0.5).abs() < 1e-15);
    }

    #[test]
    fn compressive_volumetric_stress_survives_full_damage() {
        let mut mat = unit_moduli();
        mat.shear = 0.0;
        let a = 0.3;
        let s = stress(&VoigtStrain::new(-a, -a, 0.0), 1.0, &mat);
        assert!((s.xx + 2.0 * a).abs() < 1e-15);
        assert!((s.yy + 2.0 * a).abs() < 1e-15);
        assert_eq!(s.xy, 0.0);
    }

    #[test]
    fn undamaged_tensile_stress_is_isotropic_split_stress() {
        let mat = unit_moduli();
        let mut m = mat;
        m.k_res = 0.0;
        let eps = VoigtStrain::new(0.4, -0.1, 0.2);
        let s = stress(&eps, 0.0, &m);
        let tr = eps.trace();
        assert!((s.xx - (m.bulk * tr + 2.0 * m.shear * (0.4 - tr / 3.0))).abs() < 1e-14);
        assert!((s.yy - (m.bulk * tr + 2.0 * m.shear * (-0.1 - tr / 3.0))).abs() < 1e-14);
        assert!((s.xy - m.shear * 0.2).abs() < 1e-14);
        assert_eq!(stress(&VoigtStrain::default(), 0.3, &m), VoigtStress::default());
    }

    #[test]
    fn tangent_vanishes_when_fully_damaged_in_tension() {
        let mat = unit_moduli();
        let c = tangent(&VoigtStrain::new(0.2, 0.1, 0.05), 1.0, &mat);
        assert!(c.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn tangent_degradation_identity() {
        let mat = unit_moduli();
        let eps = VoigtStrain::new(0.2, 0.1, 0.05);
        let c0 = tangent(&eps, 0.0, &mat);
        let c1 = tangent(&eps, 1.0, &mat);
        let tensile = tangent_degraded(&eps, 1.0, &mat);
        for i in 0..3 {
            for j in 0..3 {
                assert!((c0[i][j] - c1[i][j] - tensile[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn tangent_matches_directional_difference() {
        let mat = unit_moduli();
        let eps = VoigtStrain::new(0.3, 0.05, -0.1);
        let delta = [1e-6, -2e-6, 3e-6];
        let c = tangent(&eps, 0.0, &mat);
        let s0 = stress(&eps, 0.0, &mat).as_array();
        let s1 = stress(
            &VoigtStrain::new(eps.xx + delta[0], eps.yy + delta[1], eps.xy + delta[2]),
            0.0,
            &mat,
        )
        .as_array();
        for i in 0..3 {
            let lin: f64 = (0..3).map(|j| c[i][j] * delta[j]).sum();
            let diff = s1[i] - s0[i];
            assert!((diff - lin).abs() <= 1e-6 * lin.abs().max(1e-12));
        }
    }

    #[test]
    fn surface_density_examples() {
        let mut mat = unit_moduli();
        assert_eq!(surface_energy_density(0.0, [0.0, 0.0], &mat), 0.0);
        mat.gc = 100.0;
        mat.ell = 0.1;
        assert!((surface_energy_density(1.0, [0.0, 0.0], &mat) - 500.0).abs() < 1e-10);

        let mut aniso = mat;
        aniso.xi = 0.2;
        aniso.beta = -std::f64::consts::FRAC_PI_4;
        let (d, a) = (0.4, 3.0);
        let expected = aniso.gc * (d * d + aniso.ell * aniso.ell * a * a) / (2.0 * aniso.ell);
        let got = surface_energy_density(d, [a, 0.0], &aniso);
        assert!((got - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn antiplane_examples() {
        let mut mat = MaterialParams::anti_plane(1.0, 1.0, 0.04).unwrap();
        mat.k_res = 0.0;
        assert_eq!(antiplane_psi([0.0, 0.0], 0.3, &mat), (0.0, [0.0, 0.0]));
        assert_eq!(antiplane_psi([1.0, 0.0], 0.0, &mat), (0.5, [1.0, 0.0]));
        let (_, tau) = antiplane_psi([0.7, -2.0], 1.0, &mat);
        assert_eq!(tau, [0.0, 0.0]);
    }

    #[test]
    fn parameter_validation() {
        assert!(MaterialParams::plane_strain(210e3, 0.3, 6.75, 40.0).is_ok());
        assert!(MaterialParams::plane_strain(-1.0, 0.3, 6.75, 40.0).is_err());
        assert!(MaterialParams::plane_strain(1.0, 0.5, 1.0, 1.0).is_err());
        assert!(MaterialParams::plane_strain(1.0, 0.3, 0.0, 1.0).is_err());
        let m = MaterialParams::anti_plane(1.0, 1.0, 0.04).unwrap();
        assert!(m.with_anisotropy(1.2, 0.0).is_err());
        assert!(m.with_anisotropy(0.8, -0.5).is_ok());
        let mut bad = MaterialParams::plane_strain(1.0, 0.3, 1.0, 1.0).unwrap();
        bad.bulk *= 2.0;
        assert!(bad.validate().is_err());
    }

    fn strain() -> impl Strategy<Value = VoigtStrain> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| VoigtStrain::new(a, b, c))
    }

    fn material() -> impl Strategy<Value = MaterialParams> {
        (0.5..5.0f64, -0.5..0.45f64).prop_map(|(e, nu)| {
            MaterialParams::plane_strain(e, nu, 1.0, 1.0)
                .unwrap()
                .with_residual_stiffness(1e-6)
                .unwrap()
        })
    }

    proptest! {
        #[test]
        fn split_energies_are_nonnegative(eps in strain(), mat in material()) {
            let (p, m) = psi_split(&eps, &mat);
            prop_assert!(p >= 0.0 && m >= 0.0);
        }

        #[test]
        fn split_sums_to_undamaged_energy(eps in strain(), mat in material()) {
            let (p, m) = psi_split(&eps, &mat);
            let tr = eps.trace();
            let full = 0.5 * mat.bulk * tr * tr + mat.shear * eps.deviator_norm_sq();
            prop_assert!((p + m - full).abs() <= 1e-12 * full.max(1e-300));
        }

        #[test]
        fn stress_is_energy_gradient(eps in strain(), d in 0.0..1.0f64, mat in material()) {
            let norm = (eps.xx * eps.xx + eps.yy * eps.yy + eps.xy * eps.xy).sqrt();
            prop_assume!(eps.trace().abs() > 1e-3 * norm);
            let s = stress(&eps, d, &mat).as_array();
            let base = eps.as_array();
            let h = 1e-6 * norm.max(1e-3);
            for k in 0..3 {
                let mut plus = base;
                let mut minus = base;
                plus[k] += h;
                minus[k] -= h;
                let ep = VoigtStrain::new(plus[0], plus[1], plus[2]);
                let em = VoigtStrain::new(minus[0], minus[1], minus[2]);
                prop_assume!(ep.trace().signum() == em.trace().signum());
                let fd = (energy(&ep, d, &mat) - energy(&em, d, &mat)) / (2.0 * h);
                let scale = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
                prop_assert!((fd - s[k]).abs() <= 1e-5 * scale, "k={} fd={} s={}", k, fd, s[k]);
            }
        }

        #[test]
        fn tangent_is_stress_gradient(eps in strain(), d in 0.0..1.0f64, mat in material()) {
            let norm = (eps.xx * eps.xx + eps.yy * eps.yy + eps.xy * eps.xy).sqrt();
            prop_assume!(eps.trace().abs() > 1e-3 * norm);
            let c = tangent(&eps, d, &mat);
            let base = eps.as_array();
            let h = 1e-6 * norm.max(1e-3);
            let scale = c.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
            for k in 0..3 {
                let mut plus = base;
                let mut minus = base;
                plus[k] += h;
                minus[k] -= h;
                let sp = stress(&VoigtStrain::new(plus[0], plus[1], plus[2]), d, &mat).as_array();
                let sm = stress(&VoigtStrain::new(minus[0], minus[1], minus[2]), d, &mat).as_array();
                for i in 0..3 {
                    let fd = (sp[i] - sm[i]) / (2.0 * h);
                    prop_assert!((fd - c[i][k]).abs() <= 1e-5 * scale);
                }
            }
        }

        #[test]
        fn tangent_is_symmetric_psd(eps in strain(), d in 0.0..1.0f64, mat in material(), x in proptest::array::uniform3(-1.0..1.0f64)) {
            let c = tangent(&eps, d, &mat);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(c[i][j], c[j][i]);
                }
            }
            let q: f64 = (0..3).map(|i| (0..3).map(|j| x[i] * c[i][j] * x[j]).sum::<f64>()).sum();
            prop_assert!(q >= -1e-12);
        }

        #[test]
        fn degradation_is_monotone(eps in strain(), d1 in 0.0..1.0f64, d2 in 0.0..1.0f64, mat in material()) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(energy(&eps, lo, &mat) >= energy(&eps, hi, &mat));
        }

        #[test]
        fn isotropic_limit_of_anisotropic_density(d in 0.0..1.0f64, gx in -10.0..10.0f64, gy in -10.0..10.0f64, beta in -3.2..3.2f64) {
            let iso = MaterialParams::anti_plane(1.0, 2.0, 0.1).unwrap();
            let aniso = MaterialParams { xi: 0.0, beta, ..iso };
            let expected = iso.gc * (d * d + iso.ell * iso.ell * (gx * gx + gy * gy)) / (2.0 * iso.ell);
            prop_assert_eq!(surface_energy_density(d, [gx, gy], &aniso), expected);
        }

        #[test]
        fn anisotropic_metric_is_psd(xi in 0.0..=1.0f64, beta in -3.2..3.2f64) {
            let mat = MaterialParams::anti_plane(1.0, 1.0, 0.1).unwrap().with_anisotropy(xi, beta).unwrap();
            let a = mat.gradient_metric();
            let tr = a[0][0] + a[1][1];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
            let lo = 0.5 * tr - disc;
            prop_assert!(lo >= -1e-12);
            prop_assert!((lo - (1.0 - xi)).abs() < 1e-9);
        }
    }
}
