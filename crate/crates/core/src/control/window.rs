use std::collections::VecDeque;

/// Tolerance on timestamps produced by repeated tick arithmetic.
const TIME_EPS: f64 = 1e-6;

/// Sliding window of goal-directed motion error samples.
///
/// The mean is the time average of the piecewise-linear error signal over
/// the window and stays 0 until a full window of data has accumulated.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionErrorWindow {
    window_length: f64,
    entries: VecDeque<(f64, f64)>,
    mean: f64,
}

impl MotionErrorWindow {
    pub fn new(window_length: f64) -> Self {
        assert!(window_length > 0.0, "window length must be positive");
        MotionErrorWindow {
            window_length,
            entries: VecDeque::new(),
            mean: 0.0,
        }
    }

    pub fn window_length(&self) -> f64 {
        self.window_length
    }

    pub fn entries(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn mean_error(&self) -> f64 {
        self.mean
    }

    pub fn reset(&mut self) {
        self.entries.clear();
        self.mean = 0.0;
    }

    /// Appends `max(0, expert - actual)` at time `t` and returns it.
    pub fn update(&mut self, expert_speed: f64, actual_speed: f64, t: f64) -> f64 {
        let error = (expert_speed.max(0.0) - actual_speed.abs()).max(0.0);
        debug_assert!(self.entries.back().is_none_or(|&(lt, _)| t > lt));
        self.entries.push_back((t, error));
        while self
            .entries
            .front()
            .is_some_and(|&(ft, _)| ft < t - self.window_length - TIME_EPS)
        {
            self.entries.pop_front();
        }
        let span = t - self.entries.front().map_or(t, |e| e.0);
        self.mean = if span + TIME_EPS < self.window_length {
            0.0
        } else {
            let area: f64 = self
                .entries
                .iter()
                .zip(self.entries.iter().skip(1))
                .map(|(a, b)| 0.5 * (a.1 + b.1) * (b.0 - a.0))
                .sum();
            (area / span).max(0.0)
        };
        error
    }
}
