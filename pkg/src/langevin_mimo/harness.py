"""Seeded Monte-Carlo symbol-error-rate sweeps and their CSV output.

Every trial ``i`` draws its channel, symbols and noise from a stream keyed by
``(master_seed, i)`` alone, so all SNR points reuse the same channels and
normalised noise (common random numbers) and every detector sees the identical
``(y, H, sigma0^2)``.  Trials are independent and may run on several threads;
counts are reduced in trial order, so the report does not depend on the
thread count.

Detector identifiers are ``zf``, ``mmse``, ``ml`` and ``langevin`` with optional
overrides, e.g. ``langevin:M=5`` or ``langevin:L=5,T=30,eps=1e-4``.  Langevin
variants that differ only in ``M`` share one run: the variant with ``M = m``
keeps the best of the first ``m`` trajectories.
"""
import csv
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from statistics import NormalDist

import numpy as np

from .baselines import ML_SEARCH_LIMIT, detect_ml, detect_mmse, detect_zf, ml_search_size
from .channel import (
    ChannelParams,
    exp_corr_matrix,
    precompute_spectral,
    sample_kronecker,
    sample_noise,
    sigma0_sq_from_snr,
    sqrtm_psd,
)
from .constellation import SUPPORTED_ORDERS, count_symbol_errors, make_qam
from .detector import DivergenceError, LangevinConfig, detect, make_schedule

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "LangevinSettings",
    "SweepConfig",
    "SerRow",
    "SerReport",
    "CSV_HEADER",
    "parse_detector",
    "parse_config",
    "load_config",
    "run_sweep",
    "wilson_interval",
    "emit_csv",
    "read_csv",
]

LOG = logging.getLogger(__name__)

CSV_HEADER = ("detector", "snr_db", "n_symbols", "n_symbol_errors", "ser", "ci_low", "ci_high", "wall_time_s")

#: Fraction of excluded trials above which a sweep is flagged.
MAX_EXCLUDED_FRACTION = 1e-3

_BASELINES = ("zf", "mmse", "ml")
_LANGEVIN_KEYS = {"M": "n_trajectories", "L": "n_levels", "T": "steps_per_level", "eps": "epsilon"}


class ConfigError(ValueError):
    """Invalid sweep configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


@dataclass(frozen=True)
class LangevinSettings:
    """Sampler settings as they appear in a config file."""

    epsilon: float = 3e-5
    steps_per_level: int = 70
    n_levels: int = 20
    sigma_first: float = 1.0
    sigma_last: float = 0.01
    n_trajectories: int = 40

    def to_config(self, seed=0):
        return LangevinConfig(
            epsilon=self.epsilon,
            steps_per_level=self.steps_per_level,
            schedule=make_schedule(self.sigma_first, self.sigma_last, self.n_levels),
            n_trajectories=self.n_trajectories,
            seed=seed,
        )


def parse_detector(name, base=None):
    """Split a detector identifier into ``(kind, LangevinSettings or None)``."""
    base = base or LangevinSettings()
    kind, _, opts = name.partition(":")
    kind = kind.strip()
    if kind in _BASELINES:
        if opts:
            raise ConfigError("detectors", f"{kind!r} takes no options")
        return kind, None
    if kind != "langevin":
        raise ConfigError("detectors", f"unknown detector {name!r}")
    updates = {}
    for item in filter(None, (p.strip() for p in opts.split(","))):
        key, eq, value = item.partition("=")
        if not eq or key.strip() not in _LANGEVIN_KEYS:
            raise ConfigError("detectors", f"bad Langevin option {item!r} in {name!r}")
        field_name = _LANGEVIN_KEYS[key.strip()]
        try:
            updates[field_name] = float(value) if field_name == "epsilon" else int(value)
        except ValueError:
            raise ConfigError("detectors", f"bad value in {item!r}") from None
    settings = replace(base, **updates)
    try:
        settings.to_config()
    except ValueError as err:
        raise ConfigError("detectors", f"{name!r}: {err}") from None
    return kind, settings


@dataclass(frozen=True)
class SweepConfig:
    channel: ChannelParams
    modulation_order: int
    snr_db_list: tuple
    detectors: tuple
    langevin: LangevinSettings = field(default_factory=LangevinSettings)
    n_trials: int = 5000
    master_seed: int = 0
    output_path: str = "ser.csv"
    threads: int = 1
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "snr_db_list", tuple(float(s) for s in self.snr_db_list))
        object.__setattr__(self, "detectors", tuple(self.detectors))
        if isinstance(self.n_trials, bool) or not isinstance(self.n_trials, int) or self.n_trials < 1:
            raise ConfigError("n_trials", f"must be an integer >= 1, got {self.n_trials!r}")
        if not self.snr_db_list:
            raise ConfigError("snr_db", "needs at least one SNR point")
        if not all(math.isfinite(s) for s in self.snr_db_list):
            raise ConfigError("snr_db", "SNR values must be finite")
        if self.modulation_order not in SUPPORTED_ORDERS:
            raise ConfigError("order", f"must be one of {SUPPORTED_ORDERS}, got {self.modulation_order!r}")
        if not self.detectors:
            raise ConfigError("detectors", "needs at least one detector")
        if len(set(self.detectors)) != len(self.detectors):
            raise ConfigError("detectors", "duplicate detector identifiers")
        for name in self.detectors:
            kind, _ = parse_detector(name, self.langevin)
            if kind == "ml":
                size = ml_search_size(self.modulation_order, self.channel.n_users)
                if size > ML_SEARCH_LIMIT:
                    raise ConfigError(
                        "detectors",
                        f"ml is intractable here: {self.modulation_order}^{self.channel.n_users} "
                        f"candidates exceed the limit of 2^20",
                    )
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed", "must be an unsigned 64-bit integer")
        if isinstance(self.threads, bool) or not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError("threads", f"must be an integer >= 1, got {self.threads!r}")


# -- config files -------------------------------------------------------------

_SCHEMA = {
    "channel": {"n_rx": int, "n_users": int, "rho": float},
    "modulation": {"order": int},
    "langevin": {
        "epsilon": float,
        "steps_per_level": int,
        "n_levels": int,
        "sigma_first": float,
        "sigma_last": float,
        "n_trajectories": int,
    },
    "sweep": {
        "snr_db": list,
        "detectors": list,
        "n_trials": int,
        "master_seed": int,
        "output": str,
        "threads": int,
        "timing": bool,
    },
}
_REQUIRED = {"channel": ("n_rx", "n_users"), "modulation": ("order",), "sweep": ("snr_db", "detectors", "n_trials")}


def _typed(section, key, value, kind):
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise ConfigError(key, f"expected {kind.__name__} in [{section}], got {value!r}")
    return value


def parse_config(text):
    """Build a validated :class:`SweepConfig` from TOML text.

    Omitted ``[langevin]`` entries take the published defaults
    (``epsilon=3e-5, steps_per_level=70, n_levels=20, sigma_first=1,
    sigma_last=0.01, n_trajectories=40``).
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError("<document>", f"not valid TOML: {err}") from None
    for section in doc:
        if section not in _SCHEMA:
            raise ConfigError(section, "unknown section")
    values = {}
    for section, keys in _SCHEMA.items():
        body = doc.get(section, {})
        if not isinstance(body, dict):
            raise ConfigError(section, "must be a table")
        for key in body:
            if key not in keys:
                raise ConfigError(key, f"unknown key in [{section}]")
        for key in _REQUIRED.get(section, ()):
            if key not in body:
                raise ConfigError(key, f"missing from [{section}]")
        values[section] = {k: _typed(section, k, v, keys[k]) for k, v in body.items()}

    ch = values["channel"]
    rho = ch.get("rho", 0.0)
    if not 0.0 <= rho < 1.0:
        raise ConfigError("rho", f"must lie in [0, 1), got {rho!r}")
    for key in ("n_rx", "n_users"):
        if ch[key] < 1:
            raise ConfigError(key, f"must be >= 1, got {ch[key]!r}")
    params = ChannelParams(ch["n_rx"], ch["n_users"], rho)

    lang = values["langevin"]
    for key, value in lang.items():
        if not value > 0:
            raise ConfigError(key, f"must be positive, got {value!r}")
    settings = LangevinSettings(**lang)
    try:
        settings.to_config()
    except ValueError as err:
        raise ConfigError("langevin", str(err)) from None

    sw = values["sweep"]
    snrs = sw["snr_db"]
    if not all(isinstance(s, (int, float)) and not isinstance(s, bool) for s in snrs):
        raise ConfigError("snr_db", "must be a list of numbers")
    dets = sw["detectors"]
    if not all(isinstance(d, str) for d in dets):
        raise ConfigError("detectors", "must be a list of strings")
    return SweepConfig(
        channel=params,
        modulation_order=values["modulation"]["order"],
        snr_db_list=tuple(snrs),
        detectors=tuple(dets),
        langevin=settings,
        n_trials=sw["n_trials"],
        master_seed=sw.get("master_seed", 0),
        output_path=sw.get("output", "ser.csv"),
        threads=sw.get("threads", 1),
        timing=sw.get("timing", False),
    )


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


# -- sweep ----------------------------------------------------------------------


@dataclass(frozen=True)
class SerRow:
    detector: str
    snr_db: float
    n_symbols: int
    n_symbol_errors: int
    ser: float
    ci_low: float
    ci_high: float
    wall_time_s: float = 0.0


@dataclass
class SerReport:
    rows: list = field(default_factory=list)
    excluded: dict = field(default_factory=dict)
    n_trials: int = 0

    def row(self, detector, snr_db):
        for r in self.rows:
            if r.detector == detector and r.snr_db == float(snr_db):
                return r
        raise KeyError((detector, snr_db))

    def curve(self, detector):
        return [r for r in self.rows if r.detector == detector]

    @property
    def max_excluded_fraction(self):
        if not self.excluded or not self.n_trials:
            return 0.0
        return max(self.excluded.values()) / self.n_trials


def wilson_interval(errors, total, confidence=0.95):
    """Wilson score interval for a binomial proportion."""
    if total <= 0:
        raise ValueError("total must be positive")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = errors / total
    z2n = z * z / total
    centre = (p + z2n / 2) / (1 + z2n)
    half = z / (1 + z2n) * math.sqrt(p * (1 - p) / total + z2n / (4 * total))
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


def _trial_streams(master_seed, trial):
    data = np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(trial, 0))))
    lseed = int(np.random.SeedSequence(master_seed, spawn_key=(trial, 1)).generate_state(1, np.uint64)[0])
    return data, lseed


class _SweepPlan:
    def __init__(self, config):
        self.config = config
        self.c = make_qam(config.modulation_order)
        p = config.channel
        self.r_rx = sqrtm_psd(exp_corr_matrix(p.n_rx, p.rho))
        self.r_u = sqrtm_psd(exp_corr_matrix(p.n_users, p.rho))
        self.baselines = []
        # Langevin variants grouped by everything except M
        self.groups = {}
        for name in config.detectors:
            kind, settings = parse_detector(name, config.langevin)
            if settings is None:
                self.baselines.append((name, kind))
                continue
            key = replace(settings, n_trajectories=1)
            self.groups.setdefault(key, []).append((name, settings.n_trajectories))

    def run_trial(self, trial, snr_db):
        cfg = self.config
        p = cfg.channel
        c = self.c
        rng, lseed = _trial_streams(cfg.master_seed, trial)
        H = sample_kronecker(p, rng, self.r_rx, self.r_u)
        x = c.complex_points[rng.integers(c.order, size=p.n_users)]
        s0 = sigma0_sq_from_snr(snr_db, p)
        y = H @ x + sample_noise(p.n_rx, s0, rng)
        errors, times = {}, {}
        for name, kind in self.baselines:
            t0 = time.perf_counter()
            if kind == "zf":
                xh = detect_zf(y, H, c)
            elif kind == "mmse":
                xh = detect_mmse(y, H, s0, c)
            else:
                xh = detect_ml(y, H, c)
            times[name] = time.perf_counter() - t0
            errors[name] = count_symbol_errors(xh, x)[0]
        if self.groups:
            t0 = time.perf_counter()
            chan = precompute_spectral(H, s0)
            svd_time = time.perf_counter() - t0
        for key, variants in self.groups.items():
            m_max = max(m for _, m in variants)
            t0 = time.perf_counter()
            try:
                res = detect(y, H, s0, replace(key, n_trajectories=m_max).to_config(lseed), c, chan=chan)
            except (DivergenceError, np.linalg.LinAlgError) as err:
                LOG.debug("trial %d at %s dB excluded: %s", trial, snr_db, err)
                res = None
            elapsed = time.perf_counter() - t0 + svd_time
            for name, m in variants:
                times[name] = elapsed * m / m_max
                errors[name] = None if res is None else count_symbol_errors(res.best_of(m), x)[0]
        return errors, times


def run_sweep(config, threads=None, progress=None):
    """Run every configured detector on ``n_trials`` paired trials per SNR point.

    Rows come out detector-major (config order) and SNR-ascending.  Trials in
    which a detector fails are left out of that detector's counts and tallied
    in ``report.excluded``.
    """
    plan = _SweepPlan(config)
    threads = threads or config.threads
    nu = config.channel.n_users
    report = SerReport(n_trials=config.n_trials)
    by_detector = {name: [] for name in config.detectors}
    excluded = {name: 0 for name in config.detectors}
    for snr in sorted(config.snr_db_list):
        trials = range(config.n_trials)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(lambda i: plan.run_trial(i, snr), trials))
        else:
            results = [plan.run_trial(i, snr) for i in trials]
        for name in config.detectors:
            errs = [r[0][name] for r in results]
            ok = [e for e in errs if e is not None]
            excluded[name] += len(errs) - len(ok)
            n_sym = nu * len(ok)
            n_err = int(sum(ok))
            if n_sym:
                ser = n_err / n_sym
                lo, hi = wilson_interval(n_err, n_sym)
            else:
                ser, lo, hi = math.nan, 0.0, 1.0
            wall = float(sum(r[1][name] for r in results)) if config.timing else 0.0
            by_detector[name].append(SerRow(name, snr, n_sym, n_err, ser, lo, hi, wall))
        if progress is not None:
            progress(snr)
    for name in config.detectors:
        report.rows.extend(by_detector[name])
    report.excluded = {k: v for k, v in excluded.items() if v}
    report.n_trials = config.n_trials * len(config.snr_db_list)
    return report


# -- CSV ------------------------------------------------------------------------


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if math.isnan(value):
        return "nan"
    return np.format_float_positional(float(value), precision=10, unique=False, fractional=False, trim="-")


def emit_csv(report, path):
    """Write the report as CSV (fixed header, one row per detector and SNR)."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in report.rows:
                writer.writerow([
                    r.detector,
                    _fmt(r.snr_db),
                    _fmt(r.n_symbols),
                    _fmt(r.n_symbol_errors),
                    _fmt(r.ser),
                    _fmt(r.ci_low),
                    _fmt(r.ci_high),
                    _fmt(r.wall_time_s),
                ])
    except OSError as err:
        raise OSError(f"cannot write CSV to {path}: {err}") from err


def read_csv(path):
    """Load a CSV written by :func:`emit_csv` back into a :class:`SerReport`."""
    report = SerReport()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        for rec in reader:
            report.rows.append(SerRow(
                rec[0], float(rec[1]), int(rec[2]), int(rec[3]),
                float(rec[4]), float(rec[5]), float(rec[6]), float(rec[7]),
            ))
    return report
