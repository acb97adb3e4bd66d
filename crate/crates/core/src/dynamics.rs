//! Synchronous round evolution, the error recursion, and the closed-form
//! steady-state lag.

use thiserror::Error;

use crate::model::SystemMatrices;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("dimension mismatch: matrices are {expected}-dimensional, state has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("I - A is singular (pivot {pivot:e}); some node cannot reach the gateway")]
    NotConvergent { pivot: f64 },
    #[error("delta_t must be positive and finite, got {0}")]
    InvalidDeltaT(f64),
}

/// Node clocks `t_i(n)` at round `n`. The gateway clock is implicit: it is
/// always `delta_t * n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockState<T> {
    pub times: Vec<T>,
    pub round: u64,
    pub delta_t: T,
}

impl<T: Scalar> ClockState<T> {
    pub fn new(times: Vec<T>, delta_t: T) -> Result<Self, DynamicsError> {
        if !(delta_t > T::zero() && delta_t.is_finite()) {
            return Err(DynamicsError::InvalidDeltaT(delta_t.to_f64_lossy()));
        }
        Ok(Self {
            times,
            round: 0,
            delta_t,
        })
    }

    pub fn gateway_time(&self) -> T {
        ramp(self.delta_t, self.round)
    }
}

/// `delta_t * n - t_i(n)` for every node, tagged with its round.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorState<T> {
    pub errors: Vec<T>,
    pub round: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult<T> {
    pub ess: Vec<T>,
}

fn ramp<T: Scalar>(delta_t: T, round: u64) -> T {
    delta_t * T::from_u64(round).expect("round count fits the scalar type")
}

fn check_dim<T: Scalar>(mats: &SystemMatrices<T>, found: usize) -> Result<(), DynamicsError> {
    if mats.dim() != found {
        return Err(DynamicsError::DimensionMismatch {
            expected: mats.dim(),
            found,
        });
    }
    Ok(())
}

/// One synchronous round: `T(n+1) = A T(n) + b * delta_t * n`.
pub fn step<T: Scalar>(
    state: &ClockState<T>,
    mats: &SystemMatrices<T>,
) -> Result<ClockState<T>, DynamicsError> {
    step_with_gateway_time(state, mats, state.gateway_time())
}

/// [`step`] with an explicit gateway reading in place of the ideal ramp.
pub fn step_with_gateway_time<T: Scalar>(
    state: &ClockState<T>,
    mats: &SystemMatrices<T>,
    gateway_time: T,
) -> Result<ClockState<T>, DynamicsError> {
    check_dim(mats, state.times.len())?;
    let mut times = mats.apply_a(&state.times);
    for (t, &b) in times.iter_mut().zip(mats.b()) {
        *t += b * gateway_time;
    }
    Ok(ClockState {
        times,
        round: state.round + 1,
        delta_t: state.delta_t,
    })
}

pub fn error_of<T: Scalar>(state: &ClockState<T>) -> ErrorState<T> {
    let reference = state.gateway_time();
    ErrorState {
        errors: state.times.iter().map(|&t| reference - t).collect(),
        round: state.round,
    }
}

/// `E(n+1) = A E(n) + delta_t * 1`.
pub fn error_step<T: Scalar>(
    err: &ErrorState<T>,
    mats: &SystemMatrices<T>,
    delta_t: T,
) -> Result<ErrorState<T>, DynamicsError> {
    check_dim(mats, err.errors.len())?;
    let errors = mats
        .apply_a(&err.errors)
        .into_iter()
        .map(|e| e + delta_t)
        .collect();
    Ok(ErrorState {
        errors,
        round: err.round + 1,
    })
}

/// Solves `(I - A) x = delta_t * 1`.
pub fn steady_state_error<T: Scalar>(
    mats: &SystemMatrices<T>,
    delta_t: T,
) -> Result<SteadyStateResult<T>, DynamicsError> {
    if !(delta_t > T::zero() && delta_t.is_finite()) {
        return Err(DynamicsError::InvalidDeltaT(delta_t.to_f64_lossy()));
    }
    let n = mats.dim();
    let mut m: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { T::one() } else { T::zero() };
                    id - mats.a(i, j)
                })
                .collect()
        })
        .collect();
    let rhs = vec![delta_t; n];
    let ess = solve_dense(&mut m, rhs)?;
    Ok(SteadyStateResult { ess })
}

/// Gaussian elimination with partial pivoting. Fails when a pivot falls below
/// `1e-12` times the largest row norm (raised to a few ulps for `f32`).
fn solve_dense<T: Scalar>(m: &mut [Vec<T>], mut rhs: Vec<T>) -> Result<Vec<T>, DynamicsError> {
    let n = rhs.len();
    let scale = m
        .iter()
        .map(|row| row.iter().fold(T::zero(), |acc, x| acc + x.abs()))
        .fold(T::zero(), T::max);
    let rel = T::of(1e-12).max(T::epsilon() * T::of_usize(4 * n.max(1)));
    let threshold = rel * scale;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&x, &y| {
                m[x][col]
                    .abs()
                    .partial_cmp(&m[y][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("non-empty pivot range");
        let pivot = m[pivot_row][col];
        if pivot.is_nan() || pivot.abs() < threshold || pivot == T::zero() {
            return Err(DynamicsError::NotConvergent {
                pivot: pivot.to_f64_lossy(),
            });
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        let (upper, lower) = m.split_at_mut(col + 1);
        let pivot_eq = &upper[col];
        for (offset, eq) in lower.iter_mut().enumerate() {
            let factor = eq[col] / pivot;
            if factor == T::zero() {
                continue;
            }
            for (v, &p) in eq[col..].iter_mut().zip(&pivot_eq[col..]) {
                *v -= factor * p;
            }
            let r = rhs[col];
            rhs[col + 1 + offset] -= factor * r;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let tail = (row + 1..n).fold(T::zero(), |acc, k| acc + m[row][k] * x[k]);
        x[row] = (rhs[row] - tail) / m[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        build_matrices, generate_topology, Endpoint, GatewayPlacement, Topology, TopologyKind,
    };
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn line3<T: Scalar>() -> SystemMatrices<T> {
        let topo = generate_topology(&TopologyKind::Line(3), GatewayPlacement::Corner).unwrap();
        build_matrices(&topo).unwrap()
    }

    fn grid<T: Scalar>(rows: usize, cols: usize) -> SystemMatrices<T> {
        let topo = generate_topology(&TopologyKind::Grid { rows, cols }, GatewayPlacement::Corner)
            .unwrap();
        build_matrices(&topo).unwrap()
    }

    fn single<T: Scalar>() -> SystemMatrices<T> {
        let topo = Topology::new(1, [(Endpoint::Node(0), Endpoint::Gateway)]).unwrap();
        build_matrices(&topo).unwrap()
    }

    #[test]
    fn step_line_example() {
        let state = ClockState {
            times: vec![10.0, 6.0],
            round: 10,
            delta_t: 1.0,
        };
        let next = step(&state, &line3()).unwrap();
        assert_eq!(next.times, vec![8.0, 10.0]);
        assert_eq!(next.round, 11);
    }

    #[test]
    fn single_node_copies_gateway() {
        let mats = single::<f64>();
        let mut state = ClockState::new(vec![123.4], 1.0).unwrap();
        for _ in 0..20 {
            state = step(&state, &mats).unwrap();
            assert_eq!(error_of(&state).errors, vec![1.0]);
        }
    }

    #[test]
    fn steady_state_trajectory_is_fixed() {
        let mats = line3::<f64>();
        let ess = steady_state_error(&mats, 1.0).unwrap().ess;
        let n = 7u64;
        let state = ClockState {
            times: ess.iter().map(|e| n as f64 - e).collect(),
            round: n,
            delta_t: 1.0,
        };
        let next = step(&state, &mats).unwrap();
        let err = error_of(&next).errors;
        assert_relative_eq!(err[0], ess[0], epsilon = 1e-12);
        assert_relative_eq!(err[1], ess[1], epsilon = 1e-12);
    }

    #[test]
    fn error_of_examples() {
        let s = ClockState {
            times: vec![4.5, 5.25],
            round: 5,
            delta_t: 1.0,
        };
        assert_eq!(error_of(&s).errors, vec![0.5, -0.25]);
        let on_ramp = ClockState {
            times: vec![5.0, 5.0],
            round: 5,
            delta_t: 1.0,
        };
        assert_eq!(error_of(&on_ramp).errors, vec![0.0, 0.0]);
    }

    #[test]
    fn error_step_examples() {
        let zero = ErrorState {
            errors: vec![0.0; 15],
            round: 0,
        };
        let next = error_step(&zero, &grid::<f64>(4, 4), 1.0).unwrap();
        assert!(next.errors.iter().all(|&e| e == 1.0));

        let fixed = ErrorState {
            errors: vec![3.0, 4.0],
            round: 3,
        };
        assert_eq!(
            error_step(&fixed, &line3(), 1.0).unwrap().errors,
            vec![3.0, 4.0]
        );

        let lone = ErrorState {
            errors: vec![7.0],
            round: 0,
        };
        assert_eq!(error_step(&lone, &single(), 1.0).unwrap().errors, vec![1.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let s = ClockState::new(vec![0.0; 3], 1.0).unwrap();
        assert_eq!(
            step(&s, &line3()),
            Err(DynamicsError::DimensionMismatch {
                expected: 2,
                found: 3
            })
        );
        let e = ErrorState {
            errors: vec![0.0],
            round: 0,
        };
        assert!(error_step(&e, &line3(), 1.0).is_err());
        assert!(ClockState::new(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn steady_state_examples() {
        assert_eq!(
            steady_state_error(&single::<f64>(), 1.0).unwrap().ess,
            vec![1.0]
        );
        let ess = steady_state_error(&line3::<f64>(), 1.0).unwrap().ess;
        assert_relative_eq!(ess[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(ess[1], 4.0, epsilon = 1e-12);
        let ess32 = steady_state_error(&line3::<f32>(), 1.0).unwrap().ess;
        assert_relative_eq!(ess32[1], 4.0f32, epsilon = 1e-5);
    }

    #[test]
    fn steady_state_matches_long_recursion() {
        let mats = line3::<f64>();
        let mut e = ErrorState {
            errors: vec![0.0, 0.0],
            round: 0,
        };
        for _ in 0..10_000 {
            e = error_step(&e, &mats, 1.0).unwrap();
        }
        assert_relative_eq!(e.errors[0], 3.0, epsilon = 1e-9);
        assert_relative_eq!(e.errors[1], 4.0, epsilon = 1e-9);
    }

    #[test]
    fn halving_delta_t_halves_ess() {
        let mats = grid::<f64>(4, 4);
        let full = steady_state_error(&mats, 1e-3).unwrap().ess;
        let half = steady_state_error(&mats, 0.5e-3).unwrap().ess;
        for (f, h) in full.iter().zip(&half) {
            assert_eq!(*h, f * 0.5);
        }
    }

    #[test]
    fn disconnected_is_not_convergent() {
        use Endpoint::{Gateway as G, Node as N};
        let topo = Topology::new(3, [(G, N(0)), (N(1), N(2))]).unwrap();
        let mats = build_matrices::<f64>(&topo).unwrap();
        assert!(matches!(
            steady_state_error(&mats, 1.0),
            Err(DynamicsError::NotConvergent { .. })
        ));
        let no_gw = Topology::new(2, [(N(0), N(1))]).unwrap();
        let mats = build_matrices::<f64>(&no_gw).unwrap();
        assert!(steady_state_error(&mats, 1.0).is_err());
    }

    #[test]
    fn converges_on_8x8_grid() {
        // Slowest mode of the corner-gateway 8x8 grid is ~0.9966, so 5000
        // rounds leave ~3e-9 s; 6000 clears 1e-9.
        let dt = 1e-3;
        let mats = grid::<f64>(8, 8);
        let ess = steady_state_error(&mats, dt).unwrap().ess;
        let mut s = ClockState::new((0..63).map(|i| (i % 7) as f64 * 0.01).collect(), dt).unwrap();
        for _ in 0..6000 {
            s = step(&s, &mats).unwrap();
        }
        let worst = error_of(&s)
            .errors
            .iter()
            .zip(&ess)
            .map(|(e, x)| (e - x).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6 * dt, "residual {worst}");
    }

    #[test]
    fn translation_shifts_clocks() {
        let mats = grid::<f64>(3, 3);
        let c = 17.25;
        let base = ClockState::new((0..8).map(|i| i as f64 * 0.3).collect(), 0.1).unwrap();
        let mut shifted = base.clone();
        shifted.times.iter_mut().for_each(|t| *t += c);
        let (mut a, mut b) = (base, shifted);
        for _ in 0..100 {
            let ga = a.gateway_time();
            a = step_with_gateway_time(&a, &mats, ga).unwrap();
            b = step_with_gateway_time(&b, &mats, ga + c).unwrap();
            for (x, y) in a.times.iter().zip(&b.times) {
                assert_relative_eq!(y - x, c, epsilon = 1e-9);
            }
        }
    }

    fn random_connected(n: usize, prob: f64, seed: u64) -> Option<SystemMatrices<f64>> {
        let topo = generate_topology(
            &TopologyKind::Random {
                n,
                edge_prob: prob,
                seed,
            },
            GatewayPlacement::Corner,
        )
        .ok()?;
        if !topo.has_spanning_path() {
            return None;
        }
        build_matrices(&topo).ok()
    }

    proptest! {
        #[test]
        fn clock_and_error_recursions_agree(
            n in 2usize..20,
            prob in 0.2f64..0.9,
            seed in any::<u64>(),
            init in proptest::collection::vec(0.0f64..0.1, 20),
        ) {
            let Some(mats) = random_connected(n, prob, seed) else { return Ok(()); };
            let dt = 1e-3;
            let mut s = ClockState::new(init[..n - 1].to_vec(), dt).unwrap();
            let mut e = error_of(&s);
            for _ in 0..300 {
                s = step(&s, &mats).unwrap();
                e = error_step(&e, &mats, dt).unwrap();
                let direct = error_of(&s);
                prop_assert_eq!(direct.round, e.round);
                let scale = direct.errors.iter().fold(dt, |m, x| m.max(x.abs()));
                for (x, y) in direct.errors.iter().zip(&e.errors) {
                    prop_assert!((x - y).abs() <= 1e-9 * scale);
                }
            }
        }

        #[test]
        fn steady_state_is_fixed_point(n in 2usize..25, prob in 0.2f64..0.9, seed in any::<u64>()) {
            let Some(mats) = random_connected(n, prob, seed) else { return Ok(()); };
            let ess = steady_state_error(&mats, 1.0).unwrap().ess;
            prop_assert!(ess.iter().all(|&x| x.is_finite() && x > 0.0));
            let e = ErrorState { errors: ess.clone(), round: 0 };
            let next = error_step(&e, &mats, 1.0).unwrap();
            for (x, y) in next.errors.iter().zip(&ess) {
                prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
            }
        }
    }
}
