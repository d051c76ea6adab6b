//! Warmup adaptation: dual-averaging step size and a windowed diagonal
//! mass-matrix estimate.

/// Nesterov dual averaging of `log ε` toward a target acceptance statistic.
#[derive(Debug, Clone)]
pub struct DualAveraging {
    target: f64,
    mu: f64,
    gamma: f64,
    t0: f64,
    kappa: f64,
    counter: f64,
    s_bar: f64,
    x_bar: f64,
}

impl DualAveraging {
    pub fn new(target: f64, initial_step: f64) -> Self {
        let mut da = Self { target, mu: 0.0, gamma: 0.05, t0: 10.0, kappa: 0.75, counter: 0.0, s_bar: 0.0, x_bar: 0.0 };
        da.restart(initial_step);
        da
    }

    pub fn restart(&mut self, step: f64) {
        self.mu = (10.0 * step).ln();
        self.counter = 0.0;
        self.s_bar = 0.0;
        self.x_bar = 0.0;
    }

    /// Feeds one acceptance statistic and returns the next step size.
    pub fn update(&mut self, accept_stat: f64) -> f64 {
        self.counter += 1.0;
        let stat = accept_stat.min(1.0);
        let eta = 1.0 / (self.counter + self.t0);
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.target - stat);
        let x = self.mu - self.s_bar * self.counter.sqrt() / self.gamma;
        let x_eta = self.counter.powf(-self.kappa);
        self.x_bar = (1.0 - x_eta) * self.x_bar + x_eta * x;
        x.exp()
    }

    /// Step size used after warmup.
    pub fn final_step(&self) -> f64 {
        self.x_bar.exp()
    }
}

/// Welford running variance.
#[derive(Debug, Clone)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Self { n: 0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    fn add(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    fn variance(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2.iter().map(|s| s / (n - 1.0)).collect()
    }
}

/// Expanding-window schedule for the diagonal metric.
///
/// Defaults: 75 initial fast-adaptation steps, a first slow window of 25
/// doubling thereafter, and 50 final step-size-only steps. Short warmups are
/// rescaled to 15% / 75% / 10%; below 20 warmup iterations only the step size
/// adapts.
#[derive(Debug, Clone)]
pub struct WindowedMetric {
    warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    window_size: usize,
    next_window: usize,
    counter: usize,
    enabled: bool,
    estimator: Welford,
}

impl WindowedMetric {
    pub fn new(dim: usize, warmup: usize) -> Self {
        let (mut init_buffer, mut term_buffer, mut base_window) = (75, 50, 25);
        let enabled = warmup >= 20;
        if enabled && init_buffer + base_window + term_buffer > warmup {
            init_buffer = (0.15 * warmup as f64) as usize;
            term_buffer = (0.1 * warmup as f64) as usize;
            base_window = warmup - (init_buffer + term_buffer);
        }
        Self {
            warmup,
            init_buffer,
            term_buffer,
            window_size: base_window,
            next_window: init_buffer + base_window - 1,
            counter: 0,
            enabled,
            estimator: Welford::new(dim),
        }
    }

    fn in_window(&self) -> bool {
        self.counter >= self.init_buffer && self.counter < self.warmup - self.term_buffer && self.counter != self.warmup
    }

    fn window_ends(&self) -> bool {
        self.counter == self.next_window && self.counter != self.warmup
    }

    fn advance_window(&mut self) {
        let last = self.warmup - self.term_buffer - 1;
        if self.next_window == last {
            return;
        }
        self.window_size *= 2;
        self.next_window = self.counter + self.window_size;
        if self.next_window != last {
            let boundary = self.next_window + 2 * self.window_size;
            if boundary >= self.warmup - self.term_buffer {
                self.next_window = last;
            }
        }
    }

    /// Records a warmup draw; returns a new inverse mass when a window closes.
    pub fn observe(&mut self, position: &[f64]) -> Option<Vec<f64>> {
        if !self.enabled {
            self.counter += 1;
            return None;
        }
        if self.in_window() {
            self.estimator.add(position);
        }
        let mut update = None;
        if self.window_ends() {
            self.advance_window();
            let n = self.estimator.n as f64;
            if self.estimator.n >= 2 {
                let var = self
                    .estimator
                    .variance()
                    .into_iter()
                    .map(|v| (n / (n + 5.0)) * v + 1e-3 * (5.0 / (n + 5.0)))
                    .collect();
                update = Some(var);
            }
            self.estimator = Welford::new(self.estimator.mean.len());
        }
        self.counter += 1;
        update
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_schedule_default_warmup() {
        let mut m = WindowedMetric::new(1, 1000);
        let mut ends = vec![];
        for i in 0..1000 {
            if m.observe(&[i as f64]).is_some() {
                ends.push(i);
            }
        }
        assert_eq!(ends, vec![99, 149, 249, 449, 949]);
    }

    #[test]
    fn short_warmup_is_rescaled() {
        let mut m = WindowedMetric::new(1, 100);
        let ends: Vec<_> = (0..100).filter(|&i| m.observe(&[i as f64]).is_some()).collect();
        assert_eq!(ends, vec![89]);
        let mut tiny = WindowedMetric::new(1, 10);
        assert!((0..10).all(|i| tiny.observe(&[i as f64]).is_none()));
    }

    #[test]
    fn dual_averaging_moves_toward_target() {
        let mut da = DualAveraging::new(0.8, 1.0);
        let mut eps = 1.0;
        for _ in 0..50 {
            eps = da.update(0.2);
        }
        assert!(eps < 1.0);
        let mut da = DualAveraging::new(0.8, 1.0);
        for _ in 0..50 {
            da.update(1.0);
        }
        assert!(da.final_step() > 1.0);
    }
}
