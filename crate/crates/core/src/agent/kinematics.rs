use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NU_MAX: usize = 25;
pub const OMEGA_MAX: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Decelerate = 0,
    DoNothing = 1,
    Accelerate = 2,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Decelerate, Action::DoNothing, Action::Accelerate];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("action index {i} out of range")))
    }
}

/// Skip velocity `nu` (frames per step) and acceleration `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kinematics {
    pub nu: usize,
    pub omega: usize,
    pub nu_max: usize,
    pub omega_max: usize,
}

impl Kinematics {
    pub fn new(nu: usize, omega: usize, nu_max: usize, omega_max: usize) -> Result<Self> {
        if nu_max == 0 || omega_max == 0 {
            return Err(Error::InvalidArgument("kinematic limits must be at least 1".into()));
        }
        if !(1..=nu_max).contains(&nu) || !(1..=omega_max).contains(&omega) {
            return Err(Error::InvalidArgument(format!(
                "kinematics ({nu}, {omega}) outside [1, {nu_max}] x [1, {omega_max}]"
            )));
        }
        Ok(Self {
            nu,
            omega,
            nu_max,
            omega_max,
        })
    }

    /// Starting state: `nu = min(S*, nu_max)`, `omega = 1`.
    pub fn initial(target: usize, nu_max: usize, omega_max: usize) -> Result<Self> {
        Self::new(target.clamp(1, nu_max.max(1)), 1, nu_max, omega_max)
    }

    /// Updates `nu` with the current `omega`, then `omega`, then clamps.
    pub fn apply(self, action: Action) -> Self {
        let (nu, omega) = (self.nu as i64, self.omega as i64);
        let (nu, omega) = match action {
            Action::Decelerate => (nu - omega, omega - 1),
            Action::DoNothing => (nu, omega),
            Action::Accelerate => (nu + omega, omega + 1),
        };
        Self {
            nu: nu.clamp(1, self.nu_max as i64) as usize,
            omega: omega.clamp(1, self.omega_max as i64) as usize,
            ..self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(nu: usize, omega: usize) -> Kinematics {
        Kinematics::new(nu, omega, NU_MAX, OMEGA_MAX).unwrap()
    }

    #[test]
    fn action_examples() {
        assert_eq!(k(10, 2).apply(Action::Accelerate), k(12, 3));
        assert_eq!(k(24, 5).apply(Action::Accelerate), k(25, 5));
        assert_eq!(k(2, 3).apply(Action::Decelerate), k(1, 2));
        assert_eq!(k(7, 4).apply(Action::DoNothing), k(7, 4));
    }

    #[test]
    fn initial_state_tracks_target() {
        assert_eq!(Kinematics::initial(12, 25, 5).unwrap(), k(12, 1));
        assert_eq!(Kinematics::initial(40, 25, 5).unwrap(), k(25, 1));
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(Kinematics::new(0, 1, 25, 5).is_err());
        assert!(Kinematics::new(3, 6, 25, 5).is_err());
        assert!(Action::from_index(3).is_err());
    }
}
