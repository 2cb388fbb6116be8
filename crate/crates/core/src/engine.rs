//! Exact event-driven dynamics.
//!
//! Between collisions every disk moves ballistically. Each [`step`] finds the
//! earliest disk–wall or disk–disk event, advances all disks to it, resolves
//! it and increments the collision counter, so the sequence of steps is the
//! collision map. Candidate events are recomputed from scratch after each
//! collision (`O(N²)` per step).

use crate::error::{Error, Result};
use crate::real::Real;
use crate::state::{PhaseState, ToleranceSet, Vec2};
use crate::twist::{apply_twist_velocity, incidence_angle, TwistRule, WallId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// Disk `disk` hits wall `wall`.
    Wall { disk: usize, wall: WallId },
    /// Disks `i < j` touch, `image` is the periodic x-shift applied to `j`.
    Pair { i: usize, j: usize, image: i32 },
}

impl EventKind {
    fn order_key(&self) -> (u8, usize, usize) {
        match *self {
            EventKind::Wall { disk, .. } => (0, disk, 0),
            EventKind::Pair { i, j, .. } => (1, i, j),
        }
    }

    pub fn is_wall(&self) -> bool {
        matches!(self, EventKind::Wall { .. })
    }
}

/// A scheduled collision at absolute time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<T = f64> {
    pub kind: EventKind,
    pub time: T,
}

/// Record of one resolved collision.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T = f64> {
    pub event: Event<T>,
    /// Free-flight time preceding the collision.
    pub dt: T,
    /// Velocities of the involved disks before the collision (second entry
    /// only for pair events).
    pub before: (Vec2<T>, Option<Vec2<T>>),
    pub after: (Vec2<T>, Option<Vec2<T>>),
    /// `(φ, ψ)` for wall events.
    pub wall_angles: Option<(f64, f64)>,
    /// Contact point for pair events.
    pub contact: Option<Vec2<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepResult<T = f64> {
    Collision(StepOutcome<T>),
    /// No disk will ever hit anything again.
    Frozen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Trapped,
    Frozen,
    Budget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub n_events: u64,
    pub reason: StopReason,
}

fn half<T: Real>() -> T {
    T::from_f64(0.5)
}

/// Time until disk `i` reaches its wall contact line, with that wall.
///
/// `None` for `v = 0`. A disk already sitting on the line and moving into the
/// wall gets `Some((0, k))`.
pub fn next_wall_event<T: Real>(state: &PhaseState<T>, i: usize) -> Option<(T, WallId)> {
    let q = &state.positions[i];
    let v = state.velocities[i].y.clone();
    let r = state.diameter.clone() * half();
    let (gap, wall) = if v > T::zero() {
        (T::one() - r - q.y.clone(), WallId::Top)
    } else if v < T::zero() {
        (q.y.clone() - r, WallId::Bottom)
    } else {
        return None;
    };
    let t = (gap / v.abs()).max_of(T::zero());
    t.is_finite().then_some((t, wall))
}

/// Earliest contact of disks `i` and `j` before either of them next reaches
/// a wall, as `(Δt, image)` where `image` is the x-shift applied to `j`.
///
/// Periodic images are visited in the order in which the relative x-motion
/// sweeps past them, so the first root found is the earliest. Only
/// approaching images count. Near-grazing roots, with `(d² − b²)/d² ≤
/// tol_root` for impact parameter `b`, are ignored.
pub fn next_pair_event<T: Real>(state: &PhaseState<T>, i: usize, j: usize, tol: &ToleranceSet) -> Option<(T, i32)> {
    let d = state.diameter.clone();
    let d2 = d.clone() * d.clone();
    let dq0 = state.positions[j].clone() - state.positions[i].clone();
    let dp = state.velocities[j].clone() - state.velocities[i].clone();
    let a = dp.norm_sq();
    if a == T::zero() {
        return None;
    }
    let horizon = match (next_wall_event(state, i), next_wall_event(state, j)) {
        (Some((ti, _)), Some((tj, _))) => Some(ti.min_of(tj)),
        (Some((t, _)), None) | (None, Some((t, _))) => Some(t),
        (None, None) => None,
    };
    let tol_root = T::from_f64(tol.tol_root);

    // First image in sweep order and the sweep direction.
    let (mut image, step): (i64, i64) = if dp.x > T::zero() {
        ((d.clone() - dq0.x.clone()).floor().to_f64() as i64, -1)
    } else if dp.x < T::zero() {
        (-(d.clone() + dq0.x.clone()).floor().to_f64() as i64, 1)
    } else {
        ((-dq0.x.clone() + T::from_f64(0.5)).floor().to_f64() as i64, 0)
    };
    let max_images = match (step, &horizon) {
        (0, _) => 1,
        (_, None) => 3,
        _ => 1 << 20,
    };
    for _ in 0..max_images {
        let shift = T::from_f64(image as f64);
        let dq = Vec2::new(dq0.x.clone() + shift, dq0.y.clone());
        if step != 0 {
            if let Some(h) = &horizon {
                // Time at which this image's x-window [−d, d] opens.
                let x_enter = if step < 0 { -d.clone() } else { d.clone() };
                let t_open = (x_enter - dq.x.clone()) / dp.x.clone();
                if t_open > h.clone() {
                    return None;
                }
            }
        }
        let b = dq.dot(&dp);
        if b < T::zero() {
            let c = dq.norm_sq() - d2.clone();
            let disc = b.clone() * b.clone() - a.clone() * c.clone();
            if disc > tol_root.clone() * a.clone() * d2.clone() {
                let t = if c <= T::zero() {
                    T::zero()
                } else {
                    c / (-b + disc.sqrt())
                };
                if !t.is_finite() || horizon.as_ref().is_some_and(|h| t > *h) {
                    return None;
                }
                return Some((t, image as i32));
            }
        }
        if step == 0 {
            return None;
        }
        image += step;
    }
    None
}

/// Elastic equal-mass collision of disks `i` and `j` in contact.
///
/// Exchanges the velocity components along the line of centers, then moves
/// both disks symmetrically so that the center distance is exactly `d`.
/// Returns the contact point.
pub fn resolve_disk_disk<T: Real>(
    state: &mut PhaseState<T>,
    i: usize,
    j: usize,
    tol: &ToleranceSet,
) -> Result<Vec2<T>> {
    resolve_pair(state, i, j, tol, 0.0)
}

/// As [`resolve_disk_disk`], accepting an extra contact mismatch of `slack`
/// for round-off accumulated during the preceding flight.
fn resolve_pair<T: Real>(
    state: &mut PhaseState<T>,
    i: usize,
    j: usize,
    tol: &ToleranceSet,
    slack: f64,
) -> Result<Vec2<T>> {
    if i == j {
        return Err(Error::Contract("a disk cannot collide with itself".into()));
    }
    let d = state.diameter.clone();
    let dq0 = state.positions[j].clone() - state.positions[i].clone();
    let (dq, _) = [-1i8, 0, 1]
        .into_iter()
        .map(|m| {
            let dq = Vec2::new(dq0.x.clone() + T::from_f64(m as f64), dq0.y.clone());
            let n2 = dq.norm_sq();
            (dq, n2)
        })
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distances"))
        .expect("three images");
    let dist = dq.norm();
    let mismatch = (dist.clone() - d.clone()).abs().to_f64();
    let allowed = tol.tol_root.max(tol.tol_overlap) * d.to_f64().max(1.0) + slack;
    if mismatch > allowed {
        return Err(Error::Contract(format!(
            "disks {i} and {j} are not in contact: distance {} vs d = {}",
            dist.to_f64(),
            d.to_f64()
        )));
    }
    let n = dq.scale(T::one() / dist.clone());
    let dp = state.velocities[j].clone() - state.velocities[i].clone();
    let w = dp.dot(&n);
    if w > T::zero() {
        return Err(Error::Contract(format!("disks {i} and {j} are receding")));
    }
    let impulse = n.scale(w);
    state.velocities[i] = state.velocities[i].clone() + impulse.clone();
    state.velocities[j] = state.velocities[j].clone() - impulse;

    let shift = n.scale((d.clone() - dist) * half());
    let qi = state.positions[i].clone() - shift.clone();
    let qj = state.positions[j].clone() + shift;
    state.positions[i] = confine(qi, &d);
    state.positions[j] = confine(qj, &d);

    let ri = state.positions[i].clone();
    let contact = Vec2::new(
        (ri.x + n.x.clone() * d.clone() * half()).wrap_unit(),
        ri.y + n.y * d * half(),
    );
    Ok(contact)
}

fn confine<T: Real>(q: Vec2<T>, d: &T) -> Vec2<T> {
    let r = d.clone() * half();
    let top = T::one() - r.clone();
    Vec2::new(q.x.wrap_unit(), q.y.max_of(r).min_of(top))
}

/// Wall collision of disk `i` at wall `k`; snaps the disk onto the contact
/// line and returns the recorded `(φ, ψ)`.
pub fn resolve_wall<T: Real>(state: &mut PhaseState<T>, i: usize, k: WallId, rule: &TwistRule) -> Result<(f64, f64)> {
    let p_in = state.velocities[i].clone();
    let p_out = apply_twist_velocity(rule, k, &p_in)?;
    let r = state.diameter.clone() * half();
    state.positions[i].y = match k {
        WallId::Bottom => r,
        WallId::Top => T::one() - r,
    };
    let phi = incidence_angle(&p_in.to_f64());
    let psi = incidence_angle(&p_out.to_f64());
    state.velocities[i] = p_out;
    Ok((phi, psi))
}

/// Free flight of every disk for `dt`.
pub fn advance<T: Real>(state: &mut PhaseState<T>, dt: &T) {
    let d = state.diameter.clone();
    for (q, p) in state.positions.iter_mut().zip(&state.velocities) {
        let moved = Vec2::new(
            q.x.clone() + p.x.clone() * dt.clone(),
            q.y.clone() + p.y.clone() * dt.clone(),
        );
        *q = confine(moved, &d);
    }
    state.time = state.time.clone() + dt.clone();
}

/// The next event, chosen by smallest time; events within `tol_event_tie` of
/// the minimum are ordered wall-before-pair, then by lowest disk index.
pub fn next_event<T: Real>(state: &PhaseState<T>, tol: &ToleranceSet) -> Option<(T, EventKind)> {
    let n = state.n_disks();
    let mut candidates: Vec<(T, EventKind)> = Vec::with_capacity(n + n * (n - 1) / 2);
    for i in 0..n {
        if let Some((t, wall)) = next_wall_event(state, i) {
            candidates.push((t, EventKind::Wall { disk: i, wall }));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if let Some((t, image)) = next_pair_event(state, i, j, tol) {
                candidates.push((t, EventKind::Pair { i, j, image }));
            }
        }
    }
    let t_min = candidates.iter().map(|(t, _)| t.clone()).reduce(|a, b| a.min_of(b))?;
    let cutoff = t_min + T::from_f64(tol.tol_event_tie);
    candidates
        .into_iter()
        .filter(|(t, _)| *t <= cutoff)
        .min_by_key(|(_, kind)| kind.order_key())
}

/// One application of the collision map.
pub fn step<T: Real>(state: &mut PhaseState<T>, rule: &TwistRule, tol: &ToleranceSet) -> Result<StepResult<T>> {
    let Some((dt, kind)) = next_event(state, tol) else {
        return Ok(StepResult::Frozen);
    };
    let new_time = state.time.clone() + dt.clone();
    if !new_time.is_finite() {
        return Ok(StepResult::Frozen);
    }
    // Pair contacts are placed from the relative motion: after a long flight
    // the absolute positions carry far more round-off than the separation.
    let separation = match kind {
        EventKind::Pair { i, j, image } => {
            let dq = state.positions[j].clone() - state.positions[i].clone();
            let dp = state.velocities[j].clone() - state.velocities[i].clone();
            let rel = Vec2::new(dq.x + T::from_f64(image as f64), dq.y) + dp.scale(dt.clone());
            Some((i, j, image, rel, dp.norm().to_f64() * dt.to_f64()))
        }
        EventKind::Wall { .. } => None,
    };
    advance(state, &dt);
    if let Some((i, j, image, rel, _)) = &separation {
        let qi = state.positions[*i].clone();
        state.positions[*j] = Vec2::new(
            (qi.x + rel.x.clone() - T::from_f64(*image as f64)).wrap_unit(),
            qi.y + rel.y.clone(),
        );
    }
    let outcome = match kind {
        EventKind::Wall { disk, wall } => {
            let before = state.velocities[disk].clone();
            let angles = resolve_wall(state, disk, wall, rule)?;
            StepOutcome {
                event: Event {
                    kind,
                    time: state.time.clone(),
                },
                dt,
                before: (before, None),
                after: (state.velocities[disk].clone(), None),
                wall_angles: Some(angles),
                contact: None,
            }
        }
        EventKind::Pair { i, j, .. } => {
            let bi = state.velocities[i].clone();
            let bj = state.velocities[j].clone();
            let travel = separation.as_ref().map_or(0.0, |s| s.4);
            let slack = 8.0 * f64::EPSILON * (1.0 + travel);
            let contact = resolve_pair(state, i, j, tol, slack)?;
            StepOutcome {
                event: Event {
                    kind,
                    time: state.time.clone(),
                },
                dt,
                before: (bi, Some(bj)),
                after: (state.velocities[i].clone(), Some(state.velocities[j].clone())),
                wall_angles: None,
                contact: Some(contact),
            }
        }
    };
    state.collisions += 1;
    Ok(StepResult::Collision(outcome))
}

/// Steps until `stop` fires on a post-collision state, the system freezes,
/// or `max_events` collisions have been processed.
pub fn run_until<T, F>(
    state: &mut PhaseState<T>,
    rule: &TwistRule,
    tol: &ToleranceSet,
    max_events: u64,
    mut stop: F,
) -> Result<RunSummary>
where
    T: Real,
    F: FnMut(&PhaseState<T>, &StepOutcome<T>) -> bool,
{
    if max_events == 0 {
        return Err(crate::error::invalid("max_events", "must be positive"));
    }
    let mut n_events = 0;
    while n_events < max_events {
        match step(state, rule, tol)? {
            StepResult::Frozen => {
                return Ok(RunSummary {
                    n_events,
                    reason: StopReason::Frozen,
                })
            }
            StepResult::Collision(outcome) => {
                n_events += 1;
                if stop(state, &outcome) {
                    return Ok(RunSummary {
                        n_events,
                        reason: StopReason::Trapped,
                    });
                }
            }
        }
    }
    Ok(RunSummary {
        n_events,
        reason: StopReason::Budget,
    })
}

/// `p_i ↦ −p_i` for every disk.
pub fn reverse_velocities<T: Real>(state: &mut PhaseState<T>) {
    for p in &mut state.velocities {
        *p = -p.clone();
    }
}

/// Free flight up to the next collision without resolving it, leaving the
/// state on the contact with incoming velocities. Returns the flight time.
pub fn advance_to_next_event<T: Real>(state: &mut PhaseState<T>, tol: &ToleranceSet) -> Option<T> {
    let (dt, _) = next_event(state, tol)?;
    advance(state, &dt);
    Some(dt)
}

/// Runs `n` collisions under `forward`, reverses all velocities, runs `n`
/// collisions under `backward` and reverses again.
///
/// Started from a pre-collision state (see [`advance_to_next_event`]) the
/// result equals the start exactly when `backward` is the time reversal of
/// `forward`; the event clock keeps running, so `time` and `collisions` are
/// not restored.
pub fn reversal_roundtrip<T: Real>(
    start: &PhaseState<T>,
    forward: &TwistRule,
    backward: &TwistRule,
    n: u64,
    tol: &ToleranceSet,
) -> Result<PhaseState<T>> {
    let mut state = start.clone();
    for (rule, label) in [(forward, "forward"), (backward, "backward")] {
        for _ in 0..n {
            if let StepResult::Frozen = step(&mut state, rule, tol)? {
                return Err(Error::Degenerate(format!("{label} run froze")));
            }
        }
        reverse_velocities(&mut state);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{horizontal_momentum, kinetic_energy};
    use approx::assert_relative_eq;

    fn two(q1: (f64, f64), p1: (f64, f64), q2: (f64, f64), p2: (f64, f64), d: f64) -> PhaseState {
        PhaseState::new(
            vec![Vec2::new(q1.0, q1.1), Vec2::new(q2.0, q2.1)],
            vec![Vec2::new(p1.0, p1.1), Vec2::new(p2.0, p2.1)],
            d,
        )
        .unwrap()
    }

    fn one(q: (f64, f64), p: (f64, f64), d: f64) -> PhaseState {
        PhaseState::new(vec![Vec2::new(q.0, q.1)], vec![Vec2::new(p.0, p.1)], d).unwrap()
    }

    #[test]
    fn wall_event_kinematics() {
        let (t, k) = next_wall_event(&one((0.3, 0.5), (0.2, 1.0), 0.1), 0).unwrap();
        assert_relative_eq!(t, 0.45, epsilon = 1e-15);
        assert_eq!(k, WallId::Top);
        assert!(next_wall_event(&one((0.3, 0.5), (1.0, 0.0), 0.1), 0).is_none());
        let (t, k) = next_wall_event(&one((0.3, 0.05), (0.0, -1.0), 0.1), 0).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(k, WallId::Bottom);
    }

    #[test]
    fn pair_event_none_cases() {
        let tol = ToleranceSet::default();
        let parallel = two((0.2, 0.5), (0.3, 0.1), (0.6, 0.5), (0.3, 0.1), 0.1);
        assert!(next_pair_event(&parallel, 0, 1, &tol).is_none());
        // Receding in y with no x motion: the direct image separates and the
        // periodic images are too far sideways to ever touch.
        let receding = two((0.5, 0.3), (0.0, -1.0), (0.5, 0.5), (0.0, 1.0), 0.1);
        assert!(next_pair_event(&receding, 0, 1, &tol).is_none());
    }

    #[test]
    fn head_on_exchange() {
        let tol = ToleranceSet::default();
        let mut s = two((0.45, 0.5), (1.0, 0.0), (0.55, 0.5), (-1.0, 0.0), 0.1);
        resolve_disk_disk(&mut s, 0, 1, &tol).unwrap();
        assert_eq!(s.velocities[0], Vec2::new(-1.0, 0.0));
        assert_eq!(s.velocities[1], Vec2::new(1.0, 0.0));
    }

    #[test]
    fn grazing_contact_leaves_velocities() {
        let tol = ToleranceSet::default();
        // Line of centers along y, relative velocity along x.
        let mut s = two((0.5, 0.45), (0.3, 0.0), (0.5, 0.55), (-0.3, 0.0), 0.1);
        resolve_disk_disk(&mut s, 0, 1, &tol).unwrap();
        assert_eq!(s.velocities[0], Vec2::new(0.3, 0.0));
        assert_eq!(s.velocities[1], Vec2::new(-0.3, 0.0));
    }

    #[test]
    fn contact_through_periodic_boundary() {
        let tol = ToleranceSet::default();
        let mut s = two((0.02, 0.5), (-1.0, 0.0), (0.92, 0.5), (1.0, 0.0), 0.1);
        let c = resolve_disk_disk(&mut s, 0, 1, &tol).unwrap();
        assert_eq!(s.velocities[0], Vec2::new(1.0, 0.0));
        assert_relative_eq!(c.x, 0.97, epsilon = 1e-12);
    }

    #[test]
    fn not_in_contact_is_a_contract_violation() {
        let tol = ToleranceSet::default();
        let mut s = two((0.2, 0.5), (1.0, 0.0), (0.6, 0.5), (-1.0, 0.0), 0.1);
        assert!(matches!(resolve_disk_disk(&mut s, 0, 1, &tol), Err(Error::Contract(_))));
    }

    #[test]
    fn wall_resolution_specular_and_tangential() {
        let mut s = one((0.3, 0.05), (0.3, -0.7), 0.1);
        resolve_wall(&mut s, 0, WallId::Bottom, &TwistRule::specular()).unwrap();
        assert_eq!(s.velocities[0], Vec2::new(0.3, 0.7));
        let mut flat = one((0.3, 0.05), (1.0, 0.0), 0.1);
        assert!(matches!(
            resolve_wall(&mut flat, 0, WallId::Bottom, &TwistRule::tan_center(0.1)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn tan_center_wall_angles_follow_cot_law() {
        let mut s = one((0.3, 0.05), (0.6, -0.8), 0.1);
        let (phi, psi) = resolve_wall(&mut s, 0, WallId::Bottom, &TwistRule::tan_center(0.1)).unwrap();
        assert_relative_eq!(1.0 / psi.tan(), (-0.1f64).exp() / phi.tan(), max_relative = 1e-12);
    }

    #[test]
    fn vertical_bounce_is_periodic() {
        let tol = ToleranceSet::default();
        let mut s = one((0.5, 0.5), (0.0, 1.0), 0.1);
        let summary = run_until(&mut s, &TwistRule::specular(), &tol, 1_000_000, |_, _| false).unwrap();
        assert_eq!(summary.reason, StopReason::Budget);
        assert_eq!(s.collisions, 1_000_000);
        assert!((kinetic_energy(&s) - 0.5).abs() < 1e-9);
        assert_eq!(s.positions[0].x, 0.5);
    }

    #[test]
    fn run_until_reasons() {
        let tol = ToleranceSet::default();
        let mut s = one((0.5, 0.5), (0.6, 0.8), 0.1);
        let r = run_until(&mut s, &TwistRule::specular(), &tol, 10, |_, _| true).unwrap();
        assert_eq!(
            r,
            RunSummary {
                n_events: 1,
                reason: StopReason::Trapped
            }
        );
        let r = run_until(&mut s, &TwistRule::specular(), &tol, 1000, |_, _| false).unwrap();
        assert_eq!(
            r,
            RunSummary {
                n_events: 1000,
                reason: StopReason::Budget
            }
        );
        let mut flat = one((0.5, 0.5), (1.0, 0.0), 0.1);
        let r = run_until(&mut flat, &TwistRule::specular(), &tol, 10, |_, _| false).unwrap();
        assert_eq!(r.reason, StopReason::Frozen);
        assert!(run_until(&mut flat, &TwistRule::specular(), &tol, 0, |_, _| false).is_err());
    }

    #[test]
    fn reversal_twice_is_identity() {
        let mut s = two((0.2, 0.3), (1.0, 0.0), (0.7, 0.6), (0.3, -0.2), 0.1);
        let orig = s.clone();
        reverse_velocities(&mut s);
        assert_eq!(s.velocities[0], Vec2::new(-1.0, -0.0));
        reverse_velocities(&mut s);
        assert_eq!(s, orig);
    }

    #[test]
    fn specular_conserves_horizontal_momentum_per_event() {
        let tol = ToleranceSet::default();
        let mut s = two((0.2, 0.3), (0.8, 0.6), (0.7, 0.6), (-0.3, 0.9539392014169456), 0.1);
        let mut m = horizontal_momentum(&s);
        for _ in 0..10_000 {
            step(&mut s, &TwistRule::specular(), &tol).unwrap();
            let m2 = horizontal_momentum(&s);
            assert!((m2 - m).abs() < 1e-11);
            m = m2;
        }
    }
}
