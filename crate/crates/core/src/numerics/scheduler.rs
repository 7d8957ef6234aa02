/// Multiplies the learning rate by `reduction_factor` once the monitored loss
/// has failed to improve for more than `patience` consecutive epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub patience: usize,
    pub reduction_factor: f64,
    pub min_lr: f64,
    best_loss: f64,
    epochs_without_improvement: usize,
    lr: f64,
}

impl PlateauScheduler {
    pub fn new(initial_lr: f64, patience: usize, reduction_factor: f64, min_lr: f64) -> Self {
        assert!(
            reduction_factor > 0.0 && reduction_factor < 1.0,
            "reduction factor must lie in (0, 1)"
        );
        Self {
            patience,
            reduction_factor,
            min_lr,
            best_loss: f64::INFINITY,
            epochs_without_improvement: 0,
            lr: initial_lr,
        }
    }

    /// Patience 2, factor 0.5, floor 1e-6.
    pub fn with_defaults(initial_lr: f64) -> Self {
        Self::new(initial_lr, 2, 0.5, 1e-6)
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }

    pub fn epochs_without_improvement(&self) -> usize {
        self.epochs_without_improvement
    }

    /// Feeds one epoch's validation loss and returns the learning rate for
    /// the next epoch. Non-finite losses count as non-improving.
    pub fn step(&mut self, loss: f64) -> f64 {
        if loss < self.best_loss {
            self.best_loss = loss;
            self.epochs_without_improvement = 0;
        } else {
            self.epochs_without_improvement += 1;
        }
        if self.epochs_without_improvement > self.patience {
            self.lr = (self.lr * self.reduction_factor)
                .max(self.min_lr)
                .min(self.lr);
            self.epochs_without_improvement = 0;
        }
        self.lr
    }
}
