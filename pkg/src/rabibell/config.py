"""Declarative experiment configuration (YAML) and presets."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from rabibell.analytic import BellLabel
from rabibell.errors import ConfigError, InvalidArgumentError
from rabibell.hilbert import QUBIT_LABELS
from rabibell.model import RabiParams

METRIC_COLUMNS = (
    "P_gg_0", "P_ee_0", "purity_q", "concurrence",
    "fid_psi_plus", "fid_psi_minus", "fid_phi_plus", "fid_phi_minus",
    "parity_exp",
)
ENGINES = ("analytic", "numeric", "both")
DETUNINGS = ("bare", "shifted")
SWEEP_PARAMETERS = ("omega_q", "omega1", "omega2")
BOSON_KINDS = ("vacuum", "fock", "coherent", "thermal")


@dataclass(frozen=True)
class BosonSpec:
    kind: str = "vacuum"
    value: float = 0.0

    @property
    def mean_photons(self) -> float:
        if self.kind == "coherent":
            return abs(self.value) ** 2
        return float(self.value)


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    peaks: tuple = (1, 3)


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description.

    Couplings are kept as given (``couplings_in == "delta"`` means in units
    of the reference detuning) and turned into :class:`RabiParams` per
    point, because the detuning moves during frequency sweeps.
    """

    name: str = "custom"
    engine: str = "analytic"
    detuning: str = "bare"
    omega: float = 1.0
    omega1: float = 0.0
    omega2: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    couplings_in: str = "delta"
    qubits: str = "gg"
    boson: BosonSpec = field(default_factory=BosonSpec)
    frame: str = "lab"
    t_delta_max: float = 8 * math.pi
    samples: int = 4001
    cutoff: object = "auto"
    convergence_tolerance: float = 1e-10
    outputs: tuple = METRIC_COLUMNS
    sweep: SweepSpec = None

    def __post_init__(self):
        _choice("engine", self.engine, ENGINES)
        _choice("detuning", self.detuning, DETUNINGS)
        _choice("couplings_in", self.couplings_in, ("delta", "absolute"))
        _choice("frame", self.frame, ("lab", "rotating"))
        valid_initial = QUBIT_LABELS + tuple(b.value for b in BellLabel)
        _choice("initial.qubits", self.qubits, valid_initial)
        _choice("initial.boson", self.boson.kind, BOSON_KINDS)
        if self.samples < 2:
            raise ConfigError("time.samples must be >= 2")
        if not (math.isfinite(self.t_delta_max) and self.t_delta_max > 0):
            raise ConfigError("time.t_delta_max must be finite and > 0")
        if self.cutoff != "auto" and (not isinstance(self.cutoff, int) or self.cutoff < 2):
            raise ConfigError("cutoff must be 'auto' or an integer >= 2")
        unknown = set(self.outputs) - set(METRIC_COLUMNS) - {"state_fidelity"}
        if unknown:
            raise ConfigError(f"unknown output columns: {sorted(unknown)}")
        if self.sweep is not None:
            _choice("sweep.parameter", self.sweep.parameter, SWEEP_PARAMETERS)
            vals = np.asarray(self.sweep.values, dtype=float)
            if vals.size == 0 or not np.all(np.isfinite(vals)) or np.any(np.diff(vals) <= 0):
                raise ConfigError("sweep values must be finite and strictly increasing")
            if any(int(k) != k or k < 1 for k in self.sweep.peaks):
                raise ConfigError("sweep peaks must be positive integers")
        try:
            self.params()
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc)) from exc

    # -- resolution ---------------------------------------------------------

    def reference_delta(self, omega1: float = None, omega2: float = None) -> float:
        """Frequency that sets the units of couplings and of ``t Delta``.

        ``bare``: the boson frequency ``omega`` (slow-qubit limit taken in
        the lab frame, qubit terms dropped). ``shifted``: ``omega - omega_q``
        with ``omega_q`` the smaller qubit frequency.
        """
        w1 = self.omega1 if omega1 is None else omega1
        w2 = self.omega2 if omega2 is None else omega2
        delta = self.omega if self.detuning == "bare" else self.omega - min(w1, w2)
        if delta <= 0:
            raise ConfigError(f"reference detuning must be > 0 (got {delta})")
        return delta

    def params(self, omega1: float = None, omega2: float = None) -> RabiParams:
        w1 = self.omega1 if omega1 is None else omega1
        w2 = self.omega2 if omega2 is None else omega2
        unit = self.reference_delta(w1, w2) if self.couplings_in == "delta" else 1.0
        return RabiParams(omega=self.omega, omega1=w1, omega2=w2,
                          gamma1=self.gamma1 * unit, gamma2=self.gamma2 * unit)

    def reference_params(self, p: RabiParams) -> RabiParams:
        """Slow-qubit model compared against ``p`` (detuning = reference detuning)."""
        w = 0.0 if self.detuning == "bare" else min(p.omega1, p.omega2)
        return p.with_(omega1=w, omega2=w)

    def sweep_points(self):
        """``(omega1, omega2)`` per sweep value."""
        out = []
        for v in self.sweep.values:
            if self.sweep.parameter == "omega_q":
                out.append((v, v))
            elif self.sweep.parameter == "omega1":
                out.append((v, self.omega2))
            else:
                out.append((self.omega1, v))
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outputs"] = list(self.outputs)
        if self.sweep is not None:
            d["sweep"]["values"] = [float(v) for v in self.sweep.values]
            d["sweep"]["peaks"] = [int(k) for k in self.sweep.peaks]
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def override(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes) if changes else self


def _choice(name, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{name} must be one of {list(allowed)}, got {value!r}")


_PI_RE = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*pi\s*$")


def parse_number(value, name="value") -> float:
    """Float, or a string such as ``"8pi"`` / ``"2 * pi"``."""
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if m:
            coeff = m.group(1)
            return (float(coeff) if coeff not in ("", "+", "-") else float(coeff + "1")) * math.pi
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"{name}: cannot parse number from {value!r}")


def _parse_boson(raw) -> BosonSpec:
    if raw is None or raw == "vacuum":
        return BosonSpec()
    if isinstance(raw, dict) and len(raw) == 1:
        kind, value = next(iter(raw.items()))
        if kind in ("fock", "coherent", "thermal"):
            if kind == "fock" and (not isinstance(value, int) or value < 0):
                raise ConfigError("initial.boson.fock must be a non-negative integer")
            value = parse_number(value, f"initial.boson.{kind}")
            if kind == "thermal" and value < 0:
                raise ConfigError("initial.boson.thermal must be >= 0")
            return BosonSpec(kind, value)
    raise ConfigError(f"cannot parse initial.boson from {raw!r}")


def _parse_values(raw):
    if isinstance(raw, dict):
        raw = [raw]
    values = []
    for item in raw:
        if isinstance(item, dict):
            try:
                start = parse_number(item["start"], "sweep.start")
                stop = parse_number(item["stop"], "sweep.stop")
                num = int(item["num"])
            except KeyError as exc:
                raise ConfigError(f"sweep grid needs start/stop/num (missing {exc})") from None
            values.extend(np.linspace(start, stop, num).tolist())
        else:
            values.append(parse_number(item, "sweep.values"))
    return tuple(values)


_TOP_KEYS = {"name", "engine", "detuning", "params", "initial", "frame", "time",
             "cutoff", "convergence_tolerance", "outputs", "sweep"}


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    params = raw.get("params") or {}
    initial = raw.get("initial") or {}
    time = raw.get("time") or {}
    kwargs = dict(
        name=str(raw.get("name", "custom")),
        engine=raw.get("engine", "analytic"),
        detuning=raw.get("detuning", "bare"),
        omega=parse_number(params.get("omega", 1.0), "params.omega"),
        omega1=parse_number(params.get("omega1", params.get("omega_q", 0.0)), "params.omega1"),
        omega2=parse_number(params.get("omega2", params.get("omega_q", 0.0)), "params.omega2"),
        gamma1=parse_number(params.get("gamma1", 0.0), "params.gamma1"),
        gamma2=parse_number(params.get("gamma2", 0.0), "params.gamma2"),
        couplings_in=params.get("couplings_in", "delta"),
        qubits=str(initial.get("qubits", "gg")),
        boson=_parse_boson(initial.get("boson")),
        frame=raw.get("frame", "lab"),
        t_delta_max=parse_number(time.get("t_delta_max", "8pi"), "time.t_delta_max"),
        samples=int(time.get("samples", 4001)),
        cutoff=raw.get("cutoff", "auto"),
        convergence_tolerance=float(raw.get("convergence_tolerance", 1e-10)),
        outputs=tuple(raw.get("outputs", METRIC_COLUMNS)),
    )
    if raw.get("sweep") is not None:
        sw = raw["sweep"]
        if "parameter" not in sw or "values" not in sw:
            raise ConfigError("sweep needs 'parameter' and 'values'")
        kwargs["sweep"] = SweepSpec(sw["parameter"], _parse_values(sw["values"]),
                                    tuple(int(k) for k in sw.get("peaks", (1, 3))))
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(raw)


def preset_names():
    root = resources.files("rabibell") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_preset(name: str) -> ExperimentConfig:
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {preset_names()}")
    text = (resources.files("rabibell") / "presets" / f"{name}.yaml").read_text()
    return config_from_dict(yaml.safe_load(text))
