"""Synthetic paired coherent/squeezed photometer runs.

At every cadence tick a coherent and a squeezed acquisition are taken
back to back; both carry the tick time (the few-second offset within a
pair is far below the growth time scale). Samples are Gaussian with a mean
proportional to the transmitted power and a variance equal to the shot
noise at that power times the probe's noise factor, plus dark noise.
Each acquisition draws from its own random stream derived from
``(seed, acquisition index)``, so runs are reproducible bit for bit.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import noise
from .errors import ConfigError
from .estimator import Acquisition, CalibrationRecord, Probe, calibrate
from .growth import REFERENCE_COHERENT, GompertzParams, gompertz_eval

# stream indices reserved for the calibration acquisitions
_BLANK_COHERENT = 10_000_000
_BLANK_SQUEEZED = 10_000_001
_DARK = 10_000_002


@dataclass(frozen=True)
class SimConfig:
    """Run configuration. Times in hours unless the name says otherwise.

    ``noise_rel_per_sample`` is the standard deviation of one detector
    sample relative to its mean for the coherent probe at the blank; it
    sets the width of the noise band every acquisition carries.
    """

    growth: GompertzParams = REFERENCE_COHERENT
    run_duration_hours: float = 5.0
    cadence_minutes: float = 1.0
    acq_duration_s: float = 5.0
    samples_per_acq: int = 10_000
    sample_rate_hz: float = 250e3
    eta_blank: float = 0.799
    sqz_at_blank_db: float = noise.DETECTED_SQUEEZING_DB
    probe_power_mw: float = 1.7
    noise_rel_per_sample: float = 0.07
    dark_fraction: float = 0.02
    drift_amplitude: float = 0.01
    drift_period_hours: float = 1.5
    drift_ramp_per_hour: float = 0.0
    lock_loss_prob: float = 0.0
    lock_loss_excess: float = 0.0
    seed: int = 0

    def __post_init__(self):
        positive = ("acq_duration_s", "sample_rate_hz", "probe_power_mw",
                    "noise_rel_per_sample", "cadence_minutes", "drift_period_hours")
        for name in positive:
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.run_duration_hours < 0.0:
            raise ConfigError("run_duration_hours must be non-negative")
        if self.run_duration_hours > 0.0 and self.cadence_minutes / 60.0 > self.run_duration_hours:
            raise ConfigError("cadence exceeds the run duration")
        if int(self.samples_per_acq) != self.samples_per_acq or self.samples_per_acq < 2:
            raise ConfigError("samples_per_acq must be an integer >= 2")
        if not 0.0 < self.eta_blank <= 1.0:
            raise ConfigError("eta_blank must lie in (0, 1]")
        if not math.isfinite(self.sqz_at_blank_db):
            raise ConfigError("sqz_at_blank_db must be finite")
        if self.dark_fraction < 0.0 or self.drift_amplitude < 0.0 or self.lock_loss_excess < 0.0:
            raise ConfigError("dark_fraction, drift_amplitude and lock_loss_excess must be >= 0")
        if not 0.0 <= self.lock_loss_prob <= 1.0:
            raise ConfigError("lock_loss_prob must lie in [0, 1]")
        if self.growth.a <= 0.0 or self.growth.mu <= 0.0:
            raise ConfigError("growth curve needs a > 0 and mu > 0")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")

    @property
    def v_sqz_at_blank(self) -> float:
        return noise.db_to_variance(self.sqz_at_blank_db)

    @property
    def cadence_hours(self) -> float:
        return self.cadence_minutes / 60.0

    @property
    def n_ticks(self) -> int:
        if self.run_duration_hours == 0.0:
            return 0
        return int(math.floor(self.run_duration_hours / self.cadence_hours + 1e-9))

    @property
    def shot_variance_blank(self) -> float:
        """Per-sample shot-noise variance of the coherent probe at the blank."""
        return (self.noise_rel_per_sample * self.eta_blank) ** 2

    @property
    def dark_variance(self) -> float:
        return self.dark_fraction * self.shot_variance_blank

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class TruthRow:
    t_hours: float
    probe: Probe
    eta_true: float
    v_true: float
    drift: float
    lock_loss: bool


@dataclass
class SyntheticDataset:
    acquisitions: list[Acquisition]
    truth: list[TruthRow]
    blanks: list[Acquisition]
    dark_variance: float
    config: SimConfig
    calibration: CalibrationRecord | None = field(default=None)


def trajectory(config: SimConfig, t):
    """Blank-normalised transmissivity ``10**-(A(t) - A(0))``."""
    g = config.growth
    t_arr = np.asarray(t, dtype=float)
    out = 10.0 ** (-(np.asarray(gompertz_eval(g, t_arr)) - gompertz_eval(g, 0.0)))
    return float(out) if t_arr.ndim == 0 else out


def drift(config: SimConfig, t):
    """Relative laser power at time ``t``."""
    t = np.asarray(t, dtype=float)
    out = (1.0 + config.drift_amplitude * np.sin(2.0 * math.pi * t / config.drift_period_hours)
           + config.drift_ramp_per_hour * t)
    return float(out) if out.ndim == 0 else out


def _stream(config: SimConfig, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(config.seed), spawn_key=(int(index),)))


def _draw(config, rng, t, probe, eta_rel, v, power, keep_samples):
    shot = config.shot_variance_blank * eta_rel * power
    mean = config.eta_blank * eta_rel * power
    var = v * shot + config.dark_variance
    samples = mean + math.sqrt(var) * rng.standard_normal(int(config.samples_per_acq))
    return Acquisition.from_samples(
        t_hours=t,
        probe=probe,
        samples=samples,
        monitor_power=config.probe_power_mw * power,
        duration_s=config.acq_duration_s,
        sample_rate_hz=config.sample_rate_hz,
        keep_samples=keep_samples,
    )


def _acquisition_time(config: SimConfig, index: int) -> tuple[float, Probe]:
    tick, slot = divmod(index, 2)
    t = tick * config.cadence_hours
    return t, (Probe.COHERENT if slot == 0 else Probe.SQUEEZED)


def _simulate_indexed(config: SimConfig, index: int, keep_samples: bool):
    t, probe = _acquisition_time(config, index)
    rng = _stream(config, index)
    eta = trajectory(config, t)
    power = drift(config, t)
    lost = False
    if probe is Probe.COHERENT:
        v = 1.0
    else:
        lost = bool(rng.random() < config.lock_loss_prob)
        v = 1.0 + config.lock_loss_excess if lost else noise.propagate_through_loss(
            config.v_sqz_at_blank, eta)
    acq = _draw(config, rng, t, probe, eta, v, power, keep_samples)
    return acq, TruthRow(t, probe, eta, v, power, lost)


def simulate_acquisition(config: SimConfig, t: float, probe: Probe | str,
                         rng: np.random.Generator | None = None,
                         keep_samples: bool = True) -> Acquisition:
    """One acquisition at time ``t``; squeezed probes may suffer lock loss."""
    probe = Probe(probe)
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    eta = trajectory(config, t)
    power = drift(config, t)
    if probe is Probe.COHERENT:
        v = 1.0
    elif rng.random() < config.lock_loss_prob:
        v = 1.0 + config.lock_loss_excess
    else:
        v = noise.propagate_through_loss(config.v_sqz_at_blank, eta)
    return _draw(config, rng, t, probe, eta, v, power, keep_samples)


def simulate_blanks(config: SimConfig) -> tuple[list[Acquisition], float]:
    """Coherent and squeezed acquisitions on the blank, and a dark-noise estimate."""
    power = drift(config, 0.0)
    coh = _draw(config, _stream(config, _BLANK_COHERENT), 0.0, Probe.COHERENT, 1.0, 1.0, power, False)
    sqz = _draw(config, _stream(config, _BLANK_SQUEEZED), 0.0, Probe.SQUEEZED, 1.0,
                config.v_sqz_at_blank, power, False)
    rng = _stream(config, _DARK)
    dark = math.sqrt(config.dark_variance) * rng.standard_normal(int(config.samples_per_acq))
    dark_var = float(dark.var(ddof=1)) if config.dark_variance > 0.0 else 0.0
    return [coh, sqz], dark_var


def simulate_run(config: SimConfig, keep_samples: bool = False) -> SyntheticDataset:
    """Full paired run plus blank calibration; deterministic in ``config.seed``."""
    acquisitions = []
    truth = []
    for index in range(2 * config.n_ticks):
        acq, row = _simulate_indexed(config, index, keep_samples)
        acquisitions.append(acq)
        truth.append(row)
    blanks, dark_var = simulate_blanks(config)
    cal = calibrate(blanks[0], blanks[1], dark_var, config.eta_blank)
    return SyntheticDataset(
        acquisitions=acquisitions,
        truth=truth,
        blanks=blanks,
        dark_variance=dark_var,
        config=config,
        calibration=cal,
    )
