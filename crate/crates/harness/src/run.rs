//! Training and test-function loops.

use std::time::Instant;

use pogd_core::{pso_init, Objective, Optimizer, TestFunction};
use pogd_data::{load_cifar10, load_mnist_idx, subset, BatchIterator, ChannelStats, Dataset};
use pogd_nn::{init_params, InitScheme, Model, ModelSpec, NnError};
use rand_chacha::ChaCha8Rng;

use crate::config::{DatasetConfig, ExperimentConfig, ModelConfig};
use crate::error::{Abort, HarnessError, Result};
use crate::metrics::MetricsRecord;
use crate::schedule::LrSchedule;
use crate::seeds::{substream, Stream};

/// Samples per forward pass when evaluating a whole split.
const EVAL_CHUNK: usize = 1000;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutput {
    /// One row per epoch.
    pub records: Vec<MetricsRecord>,
    /// One row per optimizer step, when `iter_log` is on.
    pub iterations: Vec<MetricsRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
}

/// A training run with its data, model, parameters and random streams.
pub struct Experiment {
    config: ExperimentConfig,
    run_id: String,
    schedule: LrSchedule,
    model: Model,
    train: Dataset,
    val: Dataset,
    params: Vec<f64>,
    optimizer: Optimizer<f64>,
    shuffle_rng: ChaCha8Rng,
    dropout_rng: ChaCha8Rng,
    optimizer_rng: ChaCha8Rng,
    epochs_done: usize,
    steps_done: u64,
}

fn load_datasets(config: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    let seed = config.seed;
    let take = |ds: Dataset, n: Option<usize>, stream| -> Result<Dataset> {
        Ok(match n {
            Some(n) => subset(&ds, n, &mut substream(seed, stream))?,
            None => ds,
        })
    };
    match &config.dataset {
        DatasetConfig::Mnist { train_images, train_labels, val_images, val_labels, train_subset, val_subset } => {
            let train = take(load_mnist_idx(train_images, train_labels)?, *train_subset, Stream::TrainSubset)?;
            let val = take(load_mnist_idx(val_images, val_labels)?, *val_subset, Stream::ValSubset)?;
            Ok((train, val))
        }
        DatasetConfig::Cifar10 { train_batches, val_batches, train_subset, val_subset, standardize } => {
            let train = take(load_cifar10(train_batches)?, *train_subset, Stream::TrainSubset)?;
            let val = take(load_cifar10(val_batches)?, *val_subset, Stream::ValSubset)?;
            if *standardize {
                let stats = ChannelStats::of(train.images());
                Ok((train.standardize(&stats)?.with_stats(stats.clone()), val.standardize(&stats)?.with_stats(stats)))
            } else {
                Ok((train, val))
            }
        }
        DatasetConfig::None => Err(HarnessError::Config(crate::ConfigError::new(
            None,
            "training needs a [dataset] section".into(),
        ))),
    }
}

impl Experiment {
    /// Loads the data and initializes parameters and optimizer state.
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        crate::config::validate(config).map_err(|(_, _, msg)| crate::ConfigError::new(None, msg))?;
        let spec = match config.model {
            ModelConfig::MnistCnn => ModelSpec::mnist_cnn(),
            ModelConfig::CifarCnn => ModelSpec::cifar_cnn(),
            ModelConfig::Testfn { .. } => {
                return Err(crate::ConfigError::new(None, "test-function configs run with run_testfn".into()).into())
            }
        };
        let model = Model::new(spec)?;
        let (train, val) = load_datasets(config)?;
        let schedule = config.schedule();
        let params = init_params::<f64>(&model, &mut substream(config.seed, Stream::Init), InitScheme::He).into_flat();
        let kind = config.optimizer.kind(schedule.eta(0)).expect("validated: gradient optimizer");
        let optimizer = kind.build(params.len())?;
        Ok(Experiment {
            run_id: config.run_id(),
            config: config.clone(),
            schedule,
            model,
            train,
            val,
            params,
            optimizer,
            shuffle_rng: substream(config.seed, Stream::Shuffle),
            dropout_rng: substream(config.seed, Stream::Dropout),
            optimizer_rng: substream(config.seed, Stream::Optimizer),
            epochs_done: 0,
            steps_done: 0,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn dataset(&self, split: Split) -> &Dataset {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.val,
        }
    }

    /// Evaluation-mode loss and accuracy over a whole split.
    pub fn evaluate(&self, split: Split) -> Result<Evaluation> {
        evaluate_split(&self.model, &self.params, self.dataset(split))
    }

    /// Trains for the configured number of epochs.
    pub fn run(&mut self) -> Result<RunOutput> {
        self.run_with(|_| {})
    }

    /// As [`Experiment::run`], calling `on_epoch` after each epoch row.
    pub fn run_with(&mut self, mut on_epoch: impl FnMut(&MetricsRecord)) -> Result<RunOutput> {
        let mut out = RunOutput::default();
        let Experiment {
            config,
            run_id,
            schedule,
            model,
            train,
            val,
            params,
            optimizer,
            shuffle_rng,
            dropout_rng,
            optimizer_rng,
            epochs_done,
            steps_done,
            ..
        } = self;
        let mut batches = BatchIterator::new(&*train, config.batch_size, &mut *shuffle_rng)?;
        let last_epoch = *epochs_done + config.epochs;
        while *epochs_done < last_epoch {
            let e = *epochs_done;
            let epoch = e + 1;
            let eta = schedule.eta(e);
            let started = Instant::now();
            let (mut loss_sum, mut acc_sum, mut seen) = (0.0, 0.0, 0usize);
            while let Some(idx) = batches.next_indices() {
                let step = *steps_done + 1;
                let abort = |reason: String, records: &[MetricsRecord]| Abort {
                    run_id: run_id.clone(),
                    epoch,
                    step,
                    reason,
                    completed: records.to_vec(),
                };
                let labels: Vec<usize> = idx.iter().map(|&i| train.labels()[i]).collect();
                let images = train.images().gather(idx);
                let pass = match model.forward_backward(params, &images, &labels, dropout_rng, true) {
                    Ok(p) => p,
                    Err(NnError::NonFiniteLoss) => {
                        return Err(HarnessError::Aborted(abort("non-finite training loss".into(), &out.records)))
                    }
                    Err(e) => return Err(e.into()),
                };
                if pass.grads.iter().any(|g| !g.is_finite()) {
                    return Err(HarnessError::Aborted(abort("non-finite gradient".into(), &out.records)));
                }
                optimizer.step(params, &pass.grads, eta, optimizer_rng)?;
                *steps_done += 1;
                if params.iter().any(|p| !p.is_finite()) {
                    return Err(HarnessError::Aborted(abort("non-finite parameters after the update".into(), &out.records)));
                }
                let n = labels.len() as f64;
                loss_sum += pass.loss * n;
                acc_sum += pass.accuracy * n;
                seen += labels.len();
                if config.iter_log {
                    out.iterations.push(MetricsRecord {
                        run_id: run_id.clone(),
                        epoch,
                        step: Some(*steps_done),
                        train_loss: pass.loss,
                        train_acc: Some(pass.accuracy),
                        val_loss: None,
                        val_acc: None,
                        effective_lr: Some(eta),
                        wall_ms: None,
                    });
                }
            }
            *epochs_done += 1;
            let eval = if epoch % config.eval_every == 0 || *epochs_done == last_epoch {
                Some(evaluate_split(model, params, val)?)
            } else {
                None
            };
            let record = MetricsRecord {
                run_id: run_id.clone(),
                epoch,
                step: None,
                train_loss: loss_sum / seen as f64,
                train_acc: Some(acc_sum / seen as f64),
                val_loss: eval.map(|e| e.loss),
                val_acc: eval.map(|e| e.accuracy),
                effective_lr: Some(eta),
                wall_ms: config.timing.then(|| started.elapsed().as_secs_f64() * 1e3),
            };
            on_epoch(&record);
            out.records.push(record);
        }
        Ok(out)
    }
}

fn evaluate_split(model: &Model, params: &[f64], ds: &Dataset) -> Result<Evaluation> {
    let (mut loss, mut correct) = (0.0, 0.0);
    let all: Vec<usize> = (0..ds.len()).collect();
    for chunk in all.chunks(EVAL_CHUNK) {
        let labels: Vec<usize> = chunk.iter().map(|&i| ds.labels()[i]).collect();
        let pass = model.evaluate(params, &ds.images().gather(chunk), &labels)?;
        loss += pass.loss * chunk.len() as f64;
        correct += pass.accuracy * chunk.len() as f64;
    }
    let n = ds.len() as f64;
    Ok(Evaluation {
        loss: loss / n,
        accuracy: correct / n,
    })
}

/// Runs a training config, or a test-function config through [`run_testfn`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    if config.is_testfn() {
        let out = run_testfn(config)?;
        return Ok(RunOutput {
            records: out.records,
            iterations: Vec::new(),
        });
    }
    if config.epochs == 0 {
        crate::config::validate(config).map_err(|(_, _, msg)| crate::ConfigError::new(None, msg))?;
        return Ok(RunOutput::default());
    }
    Experiment::new(config)?.run()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestfnOutput {
    /// Row `k` holds `f(x_k)` in `train_loss`, with `x_0` the start point.
    pub records: Vec<MetricsRecord>,
    pub final_x: Vec<f64>,
    pub final_f: f64,
}

/// Minimizes an analytic test function from the configured start point. The
/// schedule is indexed by iteration here; the default is a constant 0.01.
/// PSO ignores the start point and seeds its swarm uniformly in the
/// function's domain.
pub fn run_testfn(config: &ExperimentConfig) -> Result<TestfnOutput> {
    crate::config::validate(config).map_err(|(_, _, msg)| crate::ConfigError::new(None, msg))?;
    let ModelConfig::Testfn { start, iterations, .. } = &config.model else {
        return Err(crate::ConfigError::new(None, "run_testfn needs a testfn model".into()).into());
    };
    let f = config.model.test_function().expect("validated");
    let run_id = config.run_id();
    let schedule = config.schedule();
    let mut rng = substream(config.seed, Stream::Optimizer);
    let row = |k: usize, fx: f64, eta: Option<f64>| MetricsRecord {
        run_id: run_id.clone(),
        epoch: 0,
        step: Some(k as u64),
        train_loss: fx,
        train_acc: None,
        val_loss: None,
        val_acc: None,
        effective_lr: eta,
        wall_ms: None,
    };
    let abort = |k: usize, records: &[MetricsRecord]| {
        HarnessError::Aborted(Abort {
            run_id: run_id.clone(),
            epoch: 0,
            step: k as u64,
            reason: "non-finite objective value".into(),
            completed: records.to_vec(),
        })
    };
    let mut records = Vec::with_capacity(iterations + 1);

    if let Some((particles, hyper)) = config.optimizer.pso() {
        let mut swarm = pso_init(&f, start.len(), particles, f.domain(), hyper, &mut rng)?;
        records.push(row(0, swarm.gbest_f, None));
        for k in 1..=*iterations {
            swarm.step(&f, &mut rng).map_err(|e| match e {
                pogd_core::Error::NonFiniteObjective => abort(k, &records),
                e => e.into(),
            })?;
            records.push(row(k, swarm.gbest_f, None));
        }
        return Ok(TestfnOutput {
            records,
            final_x: swarm.gbest_x.into_inner(),
            final_f: swarm.gbest_f,
        });
    }

    let kind = config.optimizer.kind(schedule.eta(0)).expect("gradient optimizer");
    let mut opt = kind.build(start.len())?;
    let mut x = start.clone();
    let mut fx = value(&f, &x);
    for k in 0..*iterations {
        if !fx.is_finite() {
            return Err(abort(k, &records));
        }
        let eta = schedule.eta(k);
        records.push(row(k, fx, Some(eta)));
        let g = f.gradient(&x)?;
        opt.step(&mut x, &g, eta, &mut rng)?;
        fx = value(&f, &x);
    }
    if !fx.is_finite() {
        return Err(abort(*iterations, &records));
    }
    records.push(row(*iterations, fx, Some(schedule.eta(*iterations))));
    Ok(TestfnOutput {
        records,
        final_x: x,
        final_f: fx,
    })
}

fn value(f: &TestFunction, x: &[f64]) -> f64 {
    // Non-finite coordinates make the objective non-finite; report that as a
    // value rather than an error so the caller can abort uniformly.
    Objective::<f64>::value(f, x).unwrap_or(f64::NAN)
}
