"""Leaky integrate-and-fire simulation of the XOR motif.

Eight units: two sensory spike sources (``in0``, ``in1``) feeding the six
motif neurons. Membrane voltage follows::

    dv/dt = (V_rest - v + I_exc - I_inh) / tau
    dI_exc/dt = -I_exc / tau_syn,   dI_inh/dt = -I_inh / tau_syn

integrated with explicit Euler steps. Currents are in voltage-equivalent
units. A spike emitted at step ``t`` adds the synaptic weight to the target
current at ``t + dt``. Batches of independent parameter sets are simulated
together, which is what makes weight calibration sweeps cheap.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "NEURONS",
    "SpikingParams",
    "SpikeRecord",
    "SimulationError",
    "CalibrationError",
    "CalibrationResult",
    "simulate",
    "simulate_batch",
    "classify",
    "calibrate",
    "load_weights",
    "save_weights",
    "load_grid",
    "default_params",
    "single_kick_peak",
    "AMBIGUOUS",
]

NEURONS = ("in0", "in1", "E1", "E3", "E2", "E4", "OUT", "INH")
IN0, IN1, E1, E3, E2, E4, OUT, INH = range(8)
INHIBITORY_UNITS = (INH,)
WEIGHT_NAMES = ("w_sensory", "w_exc", "w_exc_inh", "w_inh")
PATTERNS = ((0, 0), (0, 1), (1, 0), (1, 1))
AMBIGUOUS = "ambiguous"


class SimulationError(RuntimeError):
    pass


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpikingParams:
    tau_excit: float = 10.0
    tau_inhib: float = 10.0
    v_threshold: float = -50.0
    v_rest: float = -60.0
    v_reset: float = -65.0
    v_min: float = -80.0
    v_max: float = 30.0
    refractory: float = 2.0
    tau_syn: float = 20.0
    dt: float = 0.1
    rate_hz: float = 100.0
    w_sensory: float = 0.0
    w_exc: float = 0.0
    w_exc_inh: float = 0.0
    w_inh: float = 0.0

    def __post_init__(self):
        if not (self.v_min <= self.v_reset < self.v_rest < self.v_threshold <= self.v_max):
            raise ValueError("need v_min <= v_reset < v_rest < v_threshold <= v_max")
        if self.dt <= 0 or self.tau_excit <= 0 or self.tau_inhib <= 0 or self.tau_syn <= 0:
            raise ValueError("dt and time constants must be positive")
        if self.refractory < 0 or self.rate_hz <= 0:
            raise ValueError("refractory must be >= 0 and rate positive")
        if min(self.weights) < 0:
            raise ValueError("synaptic weights must be non-negative")

    @property
    def weights(self) -> tuple[float, float, float, float]:
        return tuple(getattr(self, w) for w in WEIGHT_NAMES)

    def with_weights(self, **weights) -> "SpikingParams":
        return replace(self, **weights)


def _connectivity(w_sensory, w_exc, w_exc_inh, w_inh):
    """Excitatory and inhibitory weight matrices, shape (..., pre, post)."""
    w_sensory, w_exc, w_exc_inh, w_inh = np.broadcast_arrays(
        *(np.asarray(w, dtype=float) for w in (w_sensory, w_exc, w_exc_inh, w_inh))
    )
    shape = w_sensory.shape + (8, 8)
    exc = np.zeros(shape)
    inh = np.zeros(shape)
    for pre, post in ((IN0, E1), (IN1, E3)):
        exc[..., pre, post] = w_sensory
    for pre, post in ((E1, E2), (E3, E4), (E2, OUT), (E4, OUT)):
        exc[..., pre, post] = w_exc
    for pre in (E1, E3):
        exc[..., pre, INH] = w_exc_inh
    for post in (E2, E4):
        inh[..., INH, post] = w_inh
    return exc, inh


@dataclass
class SpikeRecord:
    duration: float
    dt: float
    spikes: dict[str, list[float]]
    voltages: np.ndarray | None = field(default=None, repr=False)

    def count(self, neuron: str, start: float = 0.0, stop: float | None = None) -> int:
        stop = self.duration if stop is None else stop
        return sum(1 for t in self.spikes[neuron] if start <= t <= stop)

    def total_spikes(self) -> int:
        return sum(len(v) for v in self.spikes.values())

    def to_csv(self, path) -> None:
        rows = sorted((t, NEURONS.index(n), n) for n, ts in self.spikes.items() for t in ts)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["neuron", "time_ms"])
            for t, _, n in rows:
                w.writerow([n, f"{t:.4f}"])


def simulate_batch(
    params: SpikingParams,
    inputs: np.ndarray,
    duration: float,
    weights: np.ndarray | None = None,
    record_voltage: bool = False,
):
    """Simulate ``B`` independent circuits.

    ``inputs`` is ``(B, 2)`` of bits; ``weights`` an optional ``(B, 4)`` array
    overriding the four weights of ``params`` per circuit. Returns
    ``(spike_steps, voltages)`` where ``spike_steps`` is a list of ``(step,
    batch, neuron)`` arrays and ``voltages`` is ``(steps + 1, B, 8)`` or None.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=bool))
    batch = inputs.shape[0]
    if weights is None:
        weights = np.tile(params.weights, (batch, 1))
    weights = np.asarray(weights, dtype=float).reshape(batch, 4)
    w_exc, w_inh = _connectivity(*weights.T)

    dt = params.dt
    steps = int(round(duration / dt))
    period = int(round(1000.0 / params.rate_hz / dt))
    refr_steps = int(round(params.refractory / dt))
    tau = np.full(8, params.tau_excit)
    tau[list(INHIBITORY_UNITS)] = params.tau_inhib
    decay = 1.0 - dt / params.tau_syn

    v = np.full((batch, 8), params.v_rest)
    i_exc = np.zeros((batch, 8))
    i_inh = np.zeros((batch, 8))
    pend_exc = np.zeros((batch, 8))
    pend_inh = np.zeros((batch, 8))
    refr = np.zeros((batch, 8), dtype=np.int64)
    lif = np.ones(8, dtype=bool)
    lif[[IN0, IN1]] = False

    traces = np.empty((steps + 1, batch, 8)) if record_voltage else None
    if record_voltage:
        traces[0] = v
    events = []

    # overflow is caught below as non-finite state
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(steps + 1):
            if step:
                i_exc += pend_exc
                i_inh += pend_inh
                dv = (params.v_rest - v + i_exc - i_inh) * (dt / tau)
                holding = refr > 0
                v = np.where(holding, params.v_reset, v + dv)
                np.clip(v, params.v_min, params.v_max, out=v)
                refr[holding] -= 1
                i_exc *= decay
                i_inh *= decay
                spk = (v >= params.v_threshold) & ~holding & lif
            else:
                spk = np.zeros((batch, 8), dtype=bool)
            if step % period == 0:
                spk[:, IN0] = inputs[:, 0]
                spk[:, IN1] = inputs[:, 1]
            if spk.any():
                v[spk & lif] = params.v_reset
                refr[spk & lif] = refr_steps
                b, nrn = np.nonzero(spk)
                events.append(np.column_stack([np.full(len(b), step), b, nrn]))
                s = spk.astype(float)
                pend_exc = np.einsum("bi,bij->bj", s, w_exc)
                pend_inh = np.einsum("bi,bij->bj", s, w_inh)
            else:
                pend_exc[:] = 0.0
                pend_inh[:] = 0.0
            if record_voltage:
                traces[step] = v
            if not np.isfinite(v).all() or not np.isfinite(i_exc).all():
                raise SimulationError(f"non-finite state at t={step * dt:.3f} ms; check dt and weights")

    ev = np.concatenate(events) if events else np.empty((0, 3), dtype=np.int64)
    return ev, traces


def simulate(
    params: SpikingParams,
    inputs: tuple[int, int],
    duration: float = 500.0,
    record_voltage: bool = False,
) -> SpikeRecord:
    if duration < 100:
        raise ValueError("duration must be at least 100 ms")
    ev, traces = simulate_batch(params, np.array([inputs]), duration, record_voltage=record_voltage)
    spikes = {n: [] for n in NEURONS}
    for step, _, nrn in ev.tolist():
        spikes[NEURONS[nrn]].append(step * params.dt)
    return SpikeRecord(duration, params.dt, spikes, traces[:, 0] if traces is not None else None)


def classify(record: SpikeRecord, window: float | None = None):
    """1 if OUT fires at least 5 times in the trailing ``window`` ms, 0 if at most once."""
    window = record.duration if window is None else window
    if window > record.duration:
        raise ValueError("window longer than the simulation")
    n = record.count("OUT", record.duration - window, record.duration)
    if n >= 5:
        return 1
    if n <= 1:
        return 0
    return AMBIGUOUS


def _classify_count(n: int):
    return 1 if n >= 5 else 0 if n <= 1 else AMBIGUOUS


def single_kick_peak(w: float, tau: float = 10.0, tau_syn: float = 20.0) -> float:
    """Peak depolarisation above rest after one input of size ``w`` at rest.

    Closed form of ``u' = (-u + w exp(-t/tau_syn)) / tau``, ``u(0) = 0``.
    """
    if np.isclose(tau, tau_syn):
        return w / np.e
    t_peak = np.log(tau_syn / tau) * tau * tau_syn / (tau_syn - tau)
    return w * tau_syn / (tau_syn - tau) * (np.exp(-t_peak / tau_syn) - np.exp(-t_peak / tau))


# -- calibration ------------------------------------------------------------------------


@dataclass
class CalibrationResult:
    grid: np.ndarray  # (G, 4)
    feasible: np.ndarray  # (G,) bool
    defaults: dict[str, float]

    @property
    def feasible_points(self) -> np.ndarray:
        return self.grid[self.feasible]


def _counts_by_pattern(params: SpikingParams, grid: np.ndarray, duration: float) -> np.ndarray:
    """Spike counts per (grid point, input pattern, neuron)."""
    g = len(grid)
    inputs = np.repeat(np.array(PATTERNS), g, axis=0)
    weights = np.tile(grid, (len(PATTERNS), 1))
    ev, _ = simulate_batch(params, inputs, duration, weights)
    counts = np.zeros((len(PATTERNS) * g, 8), dtype=np.int64)
    np.add.at(counts, (ev[:, 1], ev[:, 2]), 1)
    return counts.reshape(len(PATTERNS), g, 8).transpose(1, 0, 2)


def feasibility(params: SpikingParams, grid: np.ndarray, duration: float = 500.0) -> np.ndarray:
    """Boolean mask of grid points that realise the XOR truth table.

    A point qualifies when every input pattern classifies correctly and:
    a single active stream reaches OUT; INH stays silent with one active
    input and fires with both; with both inputs on, E2 and E4 are held to at
    most one spike each.
    """
    c = _counts_by_pattern(params, np.asarray(grid, dtype=float), duration)
    p00, p01, p10, p11 = (c[:, i] for i in range(4))
    truth = np.ones(len(grid), dtype=bool)
    for counts, want in ((p00, 0), (p01, 1), (p10, 1), (p11, 0)):
        truth &= np.array([_classify_count(int(x)) == want for x in counts[:, OUT]])
    c1 = (p01[:, OUT] >= 5) & (p10[:, OUT] >= 5)
    c2 = (p01[:, INH] == 0) & (p10[:, INH] == 0) & (p11[:, INH] > 0)
    c3 = (p11[:, E2] <= 1) & (p11[:, E4] <= 1)
    return truth & c1 & c2 & c3


def calibrate(
    params: SpikingParams,
    axes: dict[str, Sequence[float]],
    duration: float = 500.0,
) -> CalibrationResult:
    """Sweep the weight grid and return the feasible set and its median point.

    The median is taken component-wise over feasible points and snapped to
    the nearest feasible grid point so the shipped defaults are themselves
    known to work.
    """
    grid = np.array(list(itertools.product(*(axes[w] for w in WEIGHT_NAMES))), dtype=float)
    ok = feasibility(params, grid, duration)
    if not ok.any():
        raise CalibrationError("no feasible weights in the grid; widen the bounds")
    pts = grid[ok]
    med = np.median(pts, axis=0)
    span = grid.max(axis=0) - grid.min(axis=0)
    span[span == 0] = 1.0
    best = pts[np.argmin((((pts - med) / span) ** 2).sum(axis=1))]
    return CalibrationResult(grid, ok, dict(zip(WEIGHT_NAMES, map(float, best))))


def load_grid(path) -> dict[str, np.ndarray]:
    """Grid file: ``name,min,max,steps`` per weight (header optional)."""
    axes = {}
    with open(path, encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#") or row[0].strip() == "name":
                continue
            name, lo, hi, steps = (x.strip() for x in row)
            axes[name] = np.linspace(float(lo), float(hi), int(steps))
    missing = set(WEIGHT_NAMES) - set(axes)
    if missing:
        raise ValueError(f"grid file lacks {sorted(missing)}")
    return axes


def save_weights(path, weights: dict[str, float]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("name,value\n")
        for name in WEIGHT_NAMES:
            fh.write(f"{name},{weights[name]:.6g}\n")


def load_weights(path=None) -> dict[str, float]:
    """Read a ``name,value`` weight file; the bundled calibrated defaults if no path."""
    if path is None:
        text = (resources.files("motifscan") / "data" / "default_weights.csv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(text.splitlines()))
    weights = {r[0].strip(): float(r[1]) for r in rows[1:] if r}
    missing = set(WEIGHT_NAMES) - set(weights)
    if missing:
        raise ValueError(f"weight file lacks {sorted(missing)}")
    return {w: weights[w] for w in WEIGHT_NAMES}


def default_params(**overrides) -> SpikingParams:
    """Parameters with the bundled calibrated weights."""
    return replace(SpikingParams(**load_weights()), **overrides)


def params_dict(p: SpikingParams) -> dict:
    return asdict(p)
