//! One NUTS transition: iterative trajectory doubling with multinomial
//! sampling across subtrees (biased progressive sampling at the top level),
//! the generalized no-U-turn criterion, and the extra checks across merged
//! subtrees.

use std::rc::Rc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::hamiltonian::{leapfrog, PhasePoint};
use super::LogDensity;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionInfo {
    pub depth: usize,
    pub n_leapfrog: usize,
    pub accept_stat: f64,
    pub divergent: bool,
    pub energy: f64,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += x;
    }
}

/// `(a + b) · c` without materializing the sum.
fn dot_sum(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| (x + y) * z).sum()
}

/// Both ends of the segment with summed momentum `a + b` must move along it.
fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], a: &[f64], b: &[f64]) -> bool {
    dot_sum(a, b, p_sharp_plus) > 0.0 && dot_sum(a, b, p_sharp_minus) > 0.0
}

pub(crate) struct Nuts<'a, T: ?Sized> {
    pub target: &'a T,
    pub inv_mass: &'a [f64],
    pub step_size: f64,
    pub max_depth: usize,
    pub max_energy_error: f64,
}

/// Output of `build_tree` beyond the in-place updates.
struct Subtree {
    proposal: PhasePoint,
    p_sharp_begin: Rc<Vec<f64>>,
    p_sharp_end: Rc<Vec<f64>>,
    p_begin: Rc<Vec<f64>>,
    p_end: Rc<Vec<f64>>,
    rho: Vec<f64>,
    log_sum_weight: f64,
}

struct Counters {
    n_leapfrog: usize,
    sum_metro_prob: f64,
    divergent: bool,
}

impl<T: LogDensity + ?Sized> Nuts<'_, T> {
    pub fn sample_momentum<R: Rng + ?Sized>(&self, point: &mut PhasePoint, rng: &mut R) {
        for (p, m) in point.momentum.iter_mut().zip(self.inv_mass) {
            let z: f64 = rng.sample(StandardNormal);
            *p = z / m.sqrt();
        }
    }

    pub fn transition<R: Rng + ?Sized>(&self, current: &PhasePoint, rng: &mut R) -> (PhasePoint, TransitionInfo) {
        let mut start = current.clone();
        self.sample_momentum(&mut start, rng);
        let h0 = start.energy(self.inv_mass);

        let p0_sharp = Rc::new(start.velocity(self.inv_mass));
        let p0 = Rc::new(start.momentum.clone());
        let mut fwd_end = start.clone();
        let mut bck_end = start.clone();
        let mut p_sharp_fwd_fwd = Rc::clone(&p0_sharp);
        let mut p_sharp_fwd_bck: Rc<Vec<f64>>;
        let mut p_sharp_bck_fwd: Rc<Vec<f64>>;
        let mut p_sharp_bck_bck = p0_sharp;
        let mut p_fwd_fwd = Rc::clone(&p0);
        let mut p_fwd_bck: Rc<Vec<f64>>;
        let mut p_bck_fwd: Rc<Vec<f64>>;
        let mut p_bck_bck = p0;
        let mut rho = start.momentum.clone();

        let mut sample = start;
        let mut log_sum_weight = 0.0;
        let mut depth = 0;
        let mut counters = Counters { n_leapfrog: 0, sum_metro_prob: 0.0, divergent: false };

        while depth < self.max_depth {
            let forward = rng.random::<f64>() > 0.5;
            let edge = if forward { &mut fwd_end } else { &mut bck_end };
            let direction = if forward { 1.0 } else { -1.0 };
            let Some(subtree) = self.build_tree(depth, edge, direction, h0, &mut counters, rng) else {
                break;
            };
            // Orient the new subtree relative to the existing trajectory.
            let (rho_bck, rho_fwd) = if forward {
                p_bck_fwd = Rc::clone(&p_fwd_fwd);
                p_sharp_bck_fwd = Rc::clone(&p_sharp_fwd_fwd);
                p_sharp_fwd_bck = subtree.p_sharp_begin;
                p_sharp_fwd_fwd = subtree.p_sharp_end;
                p_fwd_bck = subtree.p_begin;
                p_fwd_fwd = subtree.p_end;
                (rho, subtree.rho)
            } else {
                p_fwd_bck = Rc::clone(&p_bck_bck);
                p_sharp_fwd_bck = Rc::clone(&p_sharp_bck_bck);
                p_sharp_bck_fwd = subtree.p_sharp_begin;
                p_sharp_bck_bck = subtree.p_sharp_end;
                p_bck_fwd = subtree.p_begin;
                p_bck_bck = subtree.p_end;
                (subtree.rho, rho)
            };
            depth += 1;

            if subtree.log_sum_weight > log_sum_weight {
                sample = subtree.proposal;
            } else {
                let accept = (subtree.log_sum_weight - log_sum_weight).exp();
                if rng.random::<f64>() < accept {
                    sample = subtree.proposal;
                }
            }
            log_sum_weight = log_add_exp(log_sum_weight, subtree.log_sum_weight);

            let mut persist = no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_fwd, &rho_bck, &rho_fwd);
            persist &= no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_bck, &rho_bck, &p_fwd_bck);
            persist &= no_u_turn(&p_sharp_bck_fwd, &p_sharp_fwd_fwd, &rho_fwd, &p_bck_fwd);
            rho = rho_bck;
            add_into(&mut rho, &rho_fwd);
            if !persist {
                break;
            }
        }

        let n = counters.n_leapfrog.max(1);
        let info = TransitionInfo {
            depth,
            n_leapfrog: counters.n_leapfrog,
            accept_stat: counters.sum_metro_prob / n as f64,
            divergent: counters.divergent,
            energy: sample.energy(self.inv_mass),
        };
        let mut out = sample;
        out.momentum.iter_mut().for_each(|p| *p = 0.0);
        (out, info)
    }

    /// Extends the trajectory from `edge` by `2^depth` leapfrog steps in
    /// `direction`. Returns `None` when the subtree diverged or turned.
    fn build_tree<R: Rng + ?Sized>(
        &self,
        depth: usize,
        edge: &mut PhasePoint,
        direction: f64,
        h0: f64,
        counters: &mut Counters,
        rng: &mut R,
    ) -> Option<Subtree> {
        if depth == 0 {
            counters.n_leapfrog += 1;
            let ok = leapfrog(self.target, edge, self.inv_mass, direction * self.step_size).is_ok();
            let h = if ok { edge.energy(self.inv_mass) } else { f64::INFINITY };
            let h = if h.is_nan() { f64::INFINITY } else { h };
            if h - h0 > self.max_energy_error {
                counters.divergent = true;
            }
            let delta = h0 - h;
            counters.sum_metro_prob += if delta > 0.0 { 1.0 } else { delta.exp() };
            if counters.divergent {
                return None;
            }
            let p_sharp = Rc::new(edge.velocity(self.inv_mass));
            let p = Rc::new(edge.momentum.clone());
            return Some(Subtree {
                proposal: edge.clone(),
                p_sharp_begin: Rc::clone(&p_sharp),
                p_sharp_end: p_sharp,
                p_begin: Rc::clone(&p),
                p_end: p,
                rho: edge.momentum.clone(),
                log_sum_weight: delta,
            });
        }

        let init = self.build_tree(depth - 1, edge, direction, h0, counters, rng)?;
        let last = self.build_tree(depth - 1, edge, direction, h0, counters, rng)?;

        let log_sum_weight = log_add_exp(init.log_sum_weight, last.log_sum_weight);
        let take_last = if last.log_sum_weight > log_sum_weight {
            true
        } else {
            rng.random::<f64>() < (last.log_sum_weight - log_sum_weight).exp()
        };

        let mut persist = no_u_turn(&init.p_sharp_begin, &last.p_sharp_end, &init.rho, &last.rho);
        persist &= no_u_turn(&init.p_sharp_begin, &last.p_sharp_begin, &init.rho, &last.p_begin);
        persist &= no_u_turn(&init.p_sharp_end, &last.p_sharp_end, &last.rho, &init.p_end);
        if !persist {
            return None;
        }
        let mut rho = init.rho;
        add_into(&mut rho, &last.rho);

        Some(Subtree {
            proposal: if take_last { last.proposal } else { init.proposal },
            p_sharp_begin: init.p_sharp_begin,
            p_sharp_end: last.p_sharp_end,
            p_begin: init.p_begin,
            p_end: last.p_end,
            rho,
            log_sum_weight,
        })
    }
}
