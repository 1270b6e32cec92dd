"""Experiment pipeline over a two-node cryolink and multi-hop lattice routes.

The transfer chain acting on the two-mode thermal input is::

    L1 -> S -> L2 -> B -> L3 -> C -> L4

Mode 0 carries the squeezer output and stays with the sender; mode 1 enters
the hybrid ring's second port (thermal at the attenuator temperature) and is
transmitted over the cable to the receiver.
"""

from __future__ import annotations

import csv
import io
from collections.abc import Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .constants import CABLE_ATTENUATION_DB_PER_KM, SIGNAL_FREQUENCY_HZ
from .errors import DomainError, TopologyError
from .gaussian import BeamSplitter, GaussianState, Loss, Squeeze, make_thermal_state
from .heatprofile import HeatModel, ResponseFit, heater_power_for_center, solve_profile
from .metrics import MetricReport, metric_report
from .thermal import planck_occupation

STAGES = ("L1", "S", "L2", "B", "L3", "C", "L4")
TAP_STAGE = {"hr_input": "L2", "hr_output": "B", "receiver": "L4"}
TAPS = tuple(TAP_STAGE)
SWEEP_MODES = ("full_heating", "center_only")
FIT_SERIES = ("attenuator", "alice_mc", "bob_mc", "mc_tube")

# segment stage -> modes it may act on, and which node owns it
_SEGMENT_MODES = {"L1": (0,), "L2": (0,), "L3": (0, 1), "L4": (1,)}
_SENDER_STAGES = ("L1", "L2", "L3")


def db_to_loss(loss_db: float) -> float:
    """Linear loss ``1 - 10^(-dB/10)`` of an insertion loss in dB."""
    if loss_db < 0:
        raise DomainError(f"insertion loss must be >= 0 dB, got {loss_db}")
    return 1.0 - 10.0 ** (-loss_db / 10.0)


def cable_loss(length_m: float, attenuation_db_per_km: float) -> float:
    return db_to_loss(attenuation_db_per_km * length_m / 1000.0)


def squeeze_factor_from_db(s_db: float) -> float:
    """Squeeze factor ``r`` whose ideal vacuum squeezing equals ``s_db``."""
    return s_db / 10.0 * np.log(10.0) / 2.0


@dataclass(frozen=True)
class LossSegment:
    """Lossy propagation segment; ``bath=None`` means the owning node's MC temperature."""

    stage: str
    mode: int
    epsilon: float
    bath: float | None = None

    def __post_init__(self):
        if self.stage not in _SEGMENT_MODES:
            raise DomainError(f"unknown loss stage {self.stage!r}")
        if self.mode not in _SEGMENT_MODES[self.stage]:
            raise DomainError(f"stage {self.stage} cannot act on mode {self.mode}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError(f"loss must lie in [0, 1], got {self.epsilon}")
        if self.bath is not None and self.bath < 0:
            raise DomainError("bath temperature must be >= 0")


@dataclass(frozen=True)
class NodeSpec:
    name: str
    mc_temperature: float
    attenuator_temperature: float | None = None
    local_losses: tuple[LossSegment, ...] = ()

    def __post_init__(self):
        if self.mc_temperature <= 0:
            raise DomainError(f"node {self.name}: MC temperature must be positive")
        if self.attenuator_temperature is not None and self.attenuator_temperature <= 0:
            raise DomainError(f"node {self.name}: attenuator temperature must be positive")
        object.__setattr__(self, "local_losses", tuple(self.local_losses))


@dataclass(frozen=True)
class LinkSpec:
    source: str
    target: str
    length: float = 6.0
    attenuation: float = CABLE_ATTENUATION_DB_PER_KM
    bath: str = "uniform"
    slices: int = 64

    def __post_init__(self):
        if self.length <= 0:
            raise DomainError("link length must be positive")
        if self.attenuation < 0:
            raise DomainError("attenuation must be >= 0 dB/km")
        if self.bath not in ("uniform", "profile"):
            raise DomainError(f"bath mode must be 'uniform' or 'profile', got {self.bath!r}")
        if self.slices < 1:
            raise DomainError("slices must be >= 1")

    @property
    def epsilon(self) -> float:
        return cable_loss(self.length, self.attenuation)


@dataclass(frozen=True)
class SqueezeSpec:
    r: float
    theta: float = 0.0
    n_added: float = 0.0

    def __post_init__(self):
        if self.r < 0 or self.n_added < 0:
            raise DomainError("squeeze factor and added noise must be >= 0")

    @classmethod
    def from_db(cls, s_db: float, theta: float = 0.0, n_added: float = 0.0) -> SqueezeSpec:
        return cls(squeeze_factor_from_db(s_db), theta, n_added)


@dataclass(frozen=True)
class SweepSpec:
    mode: str
    values: tuple[float, ...]
    fits: Mapping[str, ResponseFit] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in SWEEP_MODES:
            raise DomainError(f"sweep mode must be one of {SWEEP_MODES}, got {self.mode!r}")
        values = tuple(float(v) for v in self.values)
        if list(values) != sorted(values):
            raise DomainError("sweep values must be sorted ascending")
        unknown = set(self.fits) - set(FIT_SERIES)
        if unknown:
            raise DomainError(f"unknown fit series {sorted(unknown)}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "fits", dict(self.fits))


@dataclass(frozen=True)
class ExperimentConfig:
    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]
    squeeze: SqueezeSpec
    signal_frequency: float = SIGNAL_FREQUENCY_HZ
    center_temperature: float = 0.110
    taps: tuple[str, ...] = TAPS
    sweep: SweepSpec | None = None
    heat: HeatModel | None = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "links", tuple(self.links))
        taps = tuple(self.taps)
        if not taps:
            raise DomainError("at least one tap is required")
        bad = [t for t in taps if t not in TAP_STAGE]
        if bad:
            raise DomainError(f"unknown taps {bad}; choose from {TAPS}")
        object.__setattr__(self, "taps", taps)
        if self.signal_frequency <= 0:
            raise DomainError("signal frequency must be positive")
        if self.center_temperature < 0:
            raise DomainError("center temperature must be >= 0")

    def endpoints(self) -> tuple[NodeSpec, NodeSpec, LinkSpec]:
        """``(sender, receiver, link)``; raises if the topology is not one link between two nodes."""
        if len(self.nodes) != 2 or len(self.links) != 1:
            raise TopologyError(
                f"transfer needs exactly two nodes and one link, got {len(self.nodes)} nodes and {len(self.links)} links"
            )
        link = self.links[0]
        by_name = {n.name: n for n in self.nodes}
        if len(by_name) != 2 or link.source not in by_name or link.target not in by_name or link.source == link.target:
            raise TopologyError(f"link {link.source}->{link.target} does not join nodes {list(by_name)}")
        sender, receiver = by_name[link.source], by_name[link.target]
        if sender.attenuator_temperature is None:
            raise TopologyError(f"sender node {sender.name} needs an attenuator temperature")
        for seg in sender.local_losses:
            if seg.stage not in _SENDER_STAGES:
                raise TopologyError(f"stage {seg.stage} is not a sender segment")
        for seg in receiver.local_losses:
            if seg.stage != "L4":
                raise TopologyError(f"stage {seg.stage} is not a receiver segment")
        return sender, receiver, link


# -- chain construction --------------------------------------------------------


def _segment_losses(node: NodeSpec, stage: str, frequency: float) -> list[Loss]:
    out = []
    for seg in node.local_losses:
        if seg.stage != stage or seg.epsilon == 0:
            continue
        bath = node.mc_temperature if seg.bath is None else seg.bath
        out.append(Loss(seg.mode, seg.epsilon, planck_occupation(frequency, bath), label=stage))
    return out


def cable_profile(config: ExperimentConfig):
    """Temperature profile of the cable holding its midpoint at the center temperature."""
    sender, receiver, _ = config.endpoints()
    if config.heat is None:
        raise DomainError("profile bath requires a heat model")
    model = replace(
        config.heat,
        boundary_left=sender.mc_temperature,
        boundary_right=receiver.mc_temperature,
        heater_position=0.5 * config.heat.length,
    )
    power = heater_power_for_center(model, config.center_temperature)
    return solve_profile(replace(model, heater_power=power))


def _cable_elements(config: ExperimentConfig, link: LinkSpec) -> list[Loss]:
    eps = link.epsilon
    if eps == 0:
        return []
    f = config.signal_frequency
    if link.bath == "uniform":
        return [Loss(1, eps, planck_occupation(f, config.center_temperature), label="C")]
    profile = cable_profile(config)
    edges = np.linspace(profile.positions[0], profile.positions[-1], link.slices + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    eps_slice = 1.0 - (1.0 - eps) ** (1.0 / link.slices)
    return [Loss(1, eps_slice, planck_occupation(f, profile.temperature_at(x)), label="C") for x in mids]


def build_transfer_chain(config: ExperimentConfig) -> list:
    """Ordered channel elements ``L1 S L2 B L3 C L4``, truncated after the last tap.

    Lossless segments are omitted; environment photons come from the segment
    bath temperatures at the signal frequency.
    """
    sender, receiver, link = config.endpoints()
    f = config.signal_frequency
    sq = config.squeeze
    chain = []
    chain += _segment_losses(sender, "L1", f)
    chain.append(Squeeze(0, sq.r, sq.theta, sq.n_added, label="S"))
    chain += _segment_losses(sender, "L2", f)
    chain.append(BeamSplitter(0, 1, 0.5, label="B"))
    chain += _segment_losses(sender, "L3", f)
    chain += _cable_elements(config, link)
    chain += _segment_losses(receiver, "L4", f)
    last = max(STAGES.index(TAP_STAGE[t]) for t in config.taps)
    return [el for el in chain if STAGES.index(el.label) <= last]


def input_state(config: ExperimentConfig) -> GaussianState:
    """Two weak thermal modes at the sender's attenuator temperature."""
    sender, _, _ = config.endpoints()
    n = planck_occupation(config.signal_frequency, sender.attenuator_temperature)
    return make_thermal_state(2, [n, n])


@dataclass(frozen=True)
class TransferResult:
    chain: tuple
    states: dict[str, GaussianState]
    reports: dict[str, MetricReport]


def run_transfer(config: ExperimentConfig) -> TransferResult:
    chain = build_transfer_chain(config)
    state = input_state(config)
    states = {}
    for stage in STAGES:
        for element in chain:
            if element.label == stage:
                state = element.apply(state)
        for tap in config.taps:
            if TAP_STAGE[tap] == stage:
                states[tap] = state
    ordered = {tap: states[tap] for tap in TAPS if tap in states}
    return TransferResult(tuple(chain), ordered, {tap: metric_report(s) for tap, s in ordered.items()})


# -- center-temperature sweep --------------------------------------------------

SWEEP_COLUMNS = (
    "t_center_K",
    "t_att_K",
    "t_alice_mc_K",
    "t_bob_mc_K",
    "s_hr_in_dB",
    "s_hr_out_dB",
    "s_receiver_dB",
    "purity_receiver",
    "negativity",
)


@dataclass(frozen=True)
class SweepRow:
    t_center: float
    t_att: float
    t_alice_mc: float
    t_bob_mc: float
    s_hr_in: float
    s_hr_out: float
    s_receiver: float
    purity_receiver: float
    negativity: float

    def values(self) -> tuple[float, ...]:
        return (self.t_center, self.t_att, self.t_alice_mc, self.t_bob_mc, self.s_hr_in, self.s_hr_out,
                self.s_receiver, self.purity_receiver, self.negativity)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def column(self, name: str) -> np.ndarray:
        i = SWEEP_COLUMNS.index(name)
        return np.array([row.values()[i] for row in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in self.rows:
            writer.writerow([f"{v:.9g}" for v in row.values()])
        return buf.getvalue()


def config_at_center_temperature(config: ExperimentConfig, t_center: float, mode: str) -> ExperimentConfig:
    """Configuration with node temperatures coupled to ``t_center`` according to ``mode``."""
    sender, receiver, _ = config.endpoints()
    if mode == "center_only":
        return replace(config, center_temperature=t_center)
    fits = config.sweep.fits if config.sweep else {}
    missing = [k for k in ("attenuator", "alice_mc", "bob_mc") if k not in fits]
    if missing:
        raise DomainError(f"full_heating sweep needs fits for {missing}")
    new_sender = replace(
        sender,
        attenuator_temperature=float(fits["attenuator"](t_center)),
        mc_temperature=float(fits["alice_mc"](t_center)),
    )
    new_receiver = replace(receiver, mc_temperature=float(fits["bob_mc"](t_center)))
    nodes = tuple(new_sender if n.name == sender.name else new_receiver for n in config.nodes)
    heat = config.heat
    if heat is not None and "mc_tube" in fits:
        heat = replace(heat, tube_temperature=float(fits["mc_tube"](t_center)))
    return replace(config, nodes=nodes, center_temperature=t_center, heat=heat)


def _sweep_point(config: ExperimentConfig, t_center: float, mode: str) -> SweepRow:
    cfg = config_at_center_temperature(config, t_center, mode)
    cfg = replace(cfg, taps=TAPS)
    sender, receiver, _ = cfg.endpoints()
    result = run_transfer(cfg)
    rec = result.reports["receiver"]
    return SweepRow(
        t_center=t_center,
        t_att=sender.attenuator_temperature,
        t_alice_mc=sender.mc_temperature,
        t_bob_mc=receiver.mc_temperature,
        s_hr_in=result.reports["hr_input"].squeezing_db[0],
        s_hr_out=result.reports["hr_output"].squeezing_db[1],
        s_receiver=rec.squeezing_db[1],
        purity_receiver=rec.mode_purity[1],
        negativity=rec.negativity,
    )


def sweep_center_temperature(
    config: ExperimentConfig,
    values: Iterable[float] | None = None,
    mode: str | None = None,
    bounds: tuple[float, float] = (0.1, 1.0),
    workers: int = 1,
) -> SweepResult:
    """Run the transfer for each center temperature; rows follow the input order."""
    if values is None:
        if config.sweep is None:
            raise DomainError("no sweep values given and the config has no sweep section")
        values = config.sweep.values
    values = [float(v) for v in values]
    if not values:
        raise DomainError("sweep needs at least one center temperature")
    if values != sorted(values):
        raise DomainError("sweep values must be sorted ascending")
    lo, hi = bounds
    if values[0] < lo or values[-1] > hi:
        raise DomainError(f"center temperatures must lie within [{lo}, {hi}] K")
    if mode is None:
        mode = config.sweep.mode if config.sweep else "center_only"
    if mode not in SWEEP_MODES:
        raise DomainError(f"unknown sweep mode {mode!r}")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda t: _sweep_point(config, t, mode), values))
    else:
        rows = [_sweep_point(config, t, mode) for t in values]
    return SweepResult(tuple(rows))


# -- lattice topologies ----------------------------------------------------------


@dataclass(frozen=True)
class LatticeNode:
    name: str
    insertion_loss: float = 0.0
    bath: float = 0.0


@dataclass(frozen=True)
class LatticeLink:
    a: str
    b: str
    length: float
    attenuation: float = CABLE_ATTENUATION_DB_PER_KM
    bath: float = 0.0

    @property
    def epsilon(self) -> float:
        return cable_loss(self.length, self.attenuation)


@dataclass(frozen=True)
class Topology:
    nodes: Mapping[str, LatticeNode]
    links: tuple[LatticeLink, ...]

    def link_between(self, a: str, b: str) -> LatticeLink | None:
        for link in self.links:
            if {link.a, link.b} == {a, b}:
                return link
        return None

    @classmethod
    def square_lattice(cls, rows: int, cols: int, link_length: float = 6.0,
                       attenuation: float = CABLE_ATTENUATION_DB_PER_KM, bath: float = 0.0,
                       insertion_loss: float = 0.0, node_bath: float = 0.0) -> Topology:
        """Nodes ``"r,c"`` joined to their horizontal and vertical neighbours."""
        if rows < 1 or cols < 1:
            raise DomainError("lattice needs at least one row and column")
        name = "{},{}".format
        nodes = {name(r, c): LatticeNode(name(r, c), insertion_loss, node_bath) for r in range(rows) for c in range(cols)}
        links = []
        for r in range(rows):
            for c in range(cols):
                if c + 1 < cols:
                    links.append(LatticeLink(name(r, c), name(r, c + 1), link_length, attenuation, bath))
                if r + 1 < rows:
                    links.append(LatticeLink(name(r, c), name(r + 1, c), link_length, attenuation, bath))
        return cls(nodes, tuple(links))


def compose_multihop(topology: Topology, path, frequency: float = SIGNAL_FREQUENCY_HZ, mode: int = 0) -> list[Loss]:
    """Loss chain along a node path: link cables plus insertion losses of pass-through nodes."""
    path = list(path)
    for name in path:
        if name not in topology.nodes:
            raise TopologyError(f"unknown node {name!r}")
    chain = []
    for i, (a, b) in enumerate(zip(path, path[1:])):
        if i > 0:
            node = topology.nodes[a]
            if node.insertion_loss > 0:
                chain.append(Loss(mode, node.insertion_loss, planck_occupation(frequency, node.bath), label=f"node:{a}"))
        link = topology.link_between(a, b)
        if link is None:
            raise TopologyError(f"path is disconnected: no link between {a} and {b}")
        if link.epsilon > 0:
            chain.append(Loss(mode, link.epsilon, planck_occupation(frequency, link.bath), label="C"))
    return chain
