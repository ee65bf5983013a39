//! Finger parameters shared by every module.

/// Geometry, stopper, spring and inertial parameters of one finger.
///
/// Lengths are in mm, stiffnesses in N·mm/rad, masses in kg, inertias in
/// kg·mm² and gravity in mm/s². Fields ending in `_deg` hold degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerParams {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub cj: f64,
    pub cg: f64,
    pub fg: f64,
    /// Crank angle of AB below the base line in the neutral pose.
    pub neutral_crank_deg: f64,
    pub dh1: f64,
    pub dh2: f64,
    pub dtheta_c1_deg: f64,
    pub q1_deg: f64,
    pub q2_deg: f64,
    pub q3_deg: f64,
    pub k1: f64,
    pub k2: f64,
    pub masses: [f64; 3],
    pub com_offsets: [f64; 3],
    pub inertias: [f64; 3],
    pub gravity: f64,
}

impl Default for FingerParams {
    fn default() -> Self {
        let lengths = [80.0, 40.0, 20.0];
        let masses = [0.030, 0.020, 0.010];
        FingerParams {
            l1: lengths[0],
            l2: lengths[1],
            l3: lengths[2],
            cj: 28.8,
            cg: 40.0,
            fg: 40.0,
            neutral_crank_deg: 45.0,
            dh1: 15.8,
            dh2: 14.6,
            dtheta_c1_deg: 22.8,
            q1_deg: 113.2,
            q2_deg: 90.0,
            q3_deg: 83.0,
            k1: 50.0,
            k2: 50.0,
            masses,
            com_offsets: [lengths[0] / 2.0, lengths[1] / 2.0, lengths[2] / 2.0],
            inertias: rod_inertias(masses, lengths),
            gravity: 9810.0,
        }
    }
}

/// Inertias of uniform slender rods about their centres, `m·L²/12`.
pub fn rod_inertias(masses: [f64; 3], lengths: [f64; 3]) -> [f64; 3] {
    [
        masses[0] * lengths[0] * lengths[0] / 12.0,
        masses[1] * lengths[1] * lengths[1] / 12.0,
        masses[2] * lengths[2] * lengths[2] / 12.0,
    ]
}

impl FingerParams {
    pub fn lengths(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn neutral_crank(&self) -> f64 {
        self.neutral_crank_deg.to_radians()
    }

    pub fn dtheta_c1(&self) -> f64 {
        self.dtheta_c1_deg.to_radians()
    }

    pub(crate) fn all_values(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![
            ("L1", self.l1),
            ("L2", self.l2),
            ("L3", self.l3),
            ("CJ", self.cj),
            ("CG", self.cg),
            ("FG", self.fg),
            ("neutral_crank", self.neutral_crank_deg),
            ("dh1", self.dh1),
            ("dh2", self.dh2),
            ("dtheta_c1", self.dtheta_c1_deg),
            ("Q1", self.q1_deg),
            ("Q2", self.q2_deg),
            ("Q3", self.q3_deg),
            ("k1", self.k1),
            ("k2", self.k2),
            ("g", self.gravity),
        ];
        for i in 0..3 {
            v.push((["m1", "m2", "m3"][i], self.masses[i]));
            v.push((["lc1", "lc2", "lc3"][i], self.com_offsets[i]));
            v.push((["I1", "I2", "I3"][i], self.inertias[i]));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_design_table() {
        let p = FingerParams::default();
        assert_eq!(p.lengths(), [80.0, 40.0, 20.0]);
        assert_eq!((p.cj, p.cg, p.fg), (28.8, 40.0, 40.0));
        assert_eq!((p.dh1, p.dh2, p.dtheta_c1_deg), (15.8, 14.6, 22.8));
        assert_eq!((p.q1_deg, p.q2_deg, p.q3_deg), (113.2, 90.0, 83.0));
    }

    #[test]
    fn rod_inertia_defaults() {
        let p = FingerParams::default();
        assert!((p.inertias[0] - 0.03 * 6400.0 / 12.0).abs() < 1e-12);
        assert_eq!(p.com_offsets, [40.0, 20.0, 10.0]);
    }
}
