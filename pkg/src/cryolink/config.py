"""YAML experiment configuration: schema, validation and conversion.

Units are part of the key names (``_ghz``, ``_mk``, ``_k``, ``_m``, ``_db``,
``_db_per_km`` ...).  Unknown keys are rejected; validation errors carry the
dotted path of the offending field.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import heatprofile as hp
from .errors import ConfigError, DomainError
from .network import (
    ExperimentConfig,
    LinkSpec,
    LossSegment,
    NodeSpec,
    SqueezeSpec,
    SweepSpec,
    db_to_loss,
    squeeze_factor_from_db,
)

SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LossSegmentDoc(_Strict):
    stage: Literal["L1", "L2", "L3", "L4"]
    mode: int = Field(ge=0, le=1)
    loss_db: float | None = Field(default=None, ge=0)
    loss_linear: float | None = Field(default=None, ge=0, le=1)
    bath_mk: float | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _one_loss(self):
        if (self.loss_db is None) == (self.loss_linear is None):
            raise ValueError("give exactly one of loss_db or loss_linear")
        return self


class NodeDoc(_Strict):
    name: str = Field(min_length=1)
    mc_temperature_mk: float = Field(gt=0)
    attenuator_temperature_mk: float | None = Field(default=None, gt=0)
    local_losses: list[LossSegmentDoc] = []


class LinkDoc(_Strict):
    source: str
    target: str
    length_m: float = Field(default=6.0, gt=0)
    attenuation_db_per_km: float = Field(default=1.01, ge=0)
    bath: Literal["uniform", "profile"] = "uniform"
    profile_slices: int = Field(default=64, ge=1)


class SqueezeDoc(_Strict):
    r: float | None = Field(default=None, ge=0)
    squeeze_db: float | None = Field(default=None, ge=0)
    angle_rad: float = 0.0
    added_photons: float = Field(default=0.0, ge=0)

    @model_validator(mode="after")
    def _one_strength(self):
        if (self.r is None) == (self.squeeze_db is None):
            raise ValueError("give exactly one of r or squeeze_db")
        return self


class FitDoc(_Strict):
    a: float
    b_k: float
    c: float


class SweepDoc(_Strict):
    mode: Literal["full_heating", "center_only"]
    center_temperatures_k: list[float] = Field(min_length=1)
    fits: dict[Literal["attenuator", "alice_mc", "bob_mc", "mc_tube"], FitDoc] = {}

    @model_validator(mode="after")
    def _sorted(self):
        if self.center_temperatures_k != sorted(self.center_temperatures_k):
            raise ValueError("center_temperatures_k must be sorted ascending")
        if self.mode == "full_heating":
            missing = [k for k in ("attenuator", "alice_mc", "bob_mc") if k not in self.fits]
            if missing:
                raise ValueError(f"full_heating mode needs fits for {missing}")
        return self


class ConductivityDoc(_Strict):
    model: Literal["linear", "constant"] = "linear"
    kappa0_w_per_m_k2: float | None = Field(default=None, gt=0)
    value_w_per_m_k: float | None = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _params(self):
        if self.model == "linear" and self.value_w_per_m_k is not None:
            raise ValueError("value_w_per_m_k only applies to the constant model")
        if self.model == "constant" and (self.value_w_per_m_k is None or self.kappa0_w_per_m_k2 is not None):
            raise ValueError("constant model needs value_w_per_m_k (and no kappa0_w_per_m_k2)")
        return self


class HeaterDoc(_Strict):
    position_m: float = Field(default=3.0, ge=0)
    power_w: float = Field(default=0.0, ge=0)
    width_m: float = Field(default=0.05, ge=0)


class SolverDoc(_Strict):
    max_iterations: int = Field(default=500, ge=1)
    tolerance_k: float = Field(default=1e-6, gt=0)
    relaxation: float = Field(default=0.7, gt=0, le=1)


_HEAT_DEFAULTS = hp.HeatModel()


class HeatDoc(_Strict):
    length_m: float = Field(default=_HEAT_DEFAULTS.length, gt=0)
    grid_points: int = Field(default=_HEAT_DEFAULTS.grid_points, ge=3)
    boundary_left_mk: float = Field(default=_HEAT_DEFAULTS.boundary_left * 1e3, gt=0)
    boundary_right_mk: float = Field(default=_HEAT_DEFAULTS.boundary_right * 1e3, gt=0)
    conductivity: ConductivityDoc = ConductivityDoc()
    wire_cross_section_mm2: float = Field(default=_HEAT_DEFAULTS.wire_cross_section * 1e6, gt=0)
    perimeter_mm: float = Field(default=_HEAT_DEFAULTS.perimeter * 1e3, ge=0)
    emissivity: float = Field(default=_HEAT_DEFAULTS.emissivity, ge=0)
    radiation_temperature_k: float = Field(default=_HEAT_DEFAULTS.radiation_temperature, ge=0)
    tube_coupling_w_per_m_k: float = Field(default=_HEAT_DEFAULTS.coupling, ge=0)
    tube_temperature_mk: float = Field(default=_HEAT_DEFAULTS.tube_temperature * 1e3, ge=0)
    heater: HeaterDoc = HeaterDoc()
    solver: SolverDoc = SolverDoc()


class ConfigDocument(_Strict):
    schema_version: Literal[1]
    signal_frequency_ghz: float = Field(default=5.65, gt=0)
    center_temperature_mk: float = Field(default=110.0, ge=0)
    taps: list[Literal["hr_input", "hr_output", "receiver"]] = Field(
        default=["hr_input", "hr_output", "receiver"], min_length=1
    )
    squeeze: SqueezeDoc | None = None
    nodes: list[NodeDoc] | None = None
    links: list[LinkDoc] | None = None
    sweep: SweepDoc | None = None
    heat: HeatDoc | None = None


# -- conversion ------------------------------------------------------------------


def _fmt_loc(loc) -> str:
    return ".".join(str(p) for p in loc) or "<root>"


def parse_document(data) -> ConfigDocument:
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "configuration must be a mapping")])
    try:
        return ConfigDocument.model_validate(data)
    except ValidationError as exc:
        raise ConfigError((_fmt_loc(e["loc"]), e["msg"]) for e in exc.errors()) from None


def load_document(path) -> ConfigDocument:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([("<file>", f"cannot read {path}: {exc.strerror}")]) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([("<file>", f"YAML syntax error: {exc}")]) from None
    return parse_document(data)


def heat_model_from_doc(doc: HeatDoc) -> hp.HeatModel:
    if doc.conductivity.model == "constant":
        conductivity = hp.ConstantConductivity(doc.conductivity.value_w_per_m_k)
    else:
        conductivity = hp.LinearConductivity(doc.conductivity.kappa0_w_per_m_k2 or hp.DEFAULT_KAPPA0)
    return hp.HeatModel(
        length=doc.length_m,
        grid_points=doc.grid_points,
        boundary_left=doc.boundary_left_mk * 1e-3,
        boundary_right=doc.boundary_right_mk * 1e-3,
        conductivity=conductivity,
        wire_cross_section=doc.wire_cross_section_mm2 * 1e-6,
        perimeter=doc.perimeter_mm * 1e-3,
        emissivity=doc.emissivity,
        radiation_temperature=doc.radiation_temperature_k,
        coupling=doc.tube_coupling_w_per_m_k,
        tube_temperature=doc.tube_temperature_mk * 1e-3,
        heater_position=doc.heater.position_m,
        heater_power=doc.heater.power_w,
        heater_width=doc.heater.width_m,
        max_iterations=doc.solver.max_iterations,
        tolerance=doc.solver.tolerance_k,
        relaxation=doc.solver.relaxation,
    )


def heat_model(doc: ConfigDocument) -> hp.HeatModel:
    if doc.heat is None:
        raise ConfigError([("heat", "section is required for this command")])
    try:
        return heat_model_from_doc(doc.heat)
    except DomainError as exc:
        raise ConfigError([("heat", str(exc))]) from None


def _segment(seg: LossSegmentDoc) -> LossSegment:
    eps = seg.loss_linear if seg.loss_linear is not None else db_to_loss(seg.loss_db)
    bath = None if seg.bath_mk is None else seg.bath_mk * 1e-3
    return LossSegment(seg.stage, seg.mode, eps, bath)


def experiment_config(doc: ConfigDocument) -> ExperimentConfig:
    """Build the transfer/sweep configuration; raises :class:`ConfigError` with field paths."""
    missing = [(k, "section is required for this command") for k in ("squeeze", "nodes", "links") if getattr(doc, k) is None]
    if missing:
        raise ConfigError(missing)
    errors = []

    def guarded(path, build):
        try:
            return build()
        except DomainError as exc:
            errors.append((path, str(exc)))

    nodes = []
    for i, nd in enumerate(doc.nodes):
        segments = [guarded(f"nodes.{i}.local_losses.{j}", lambda s=s: _segment(s)) for j, s in enumerate(nd.local_losses)]
        nodes.append(guarded(f"nodes.{i}", lambda nd=nd, segments=segments: NodeSpec(
            nd.name,
            nd.mc_temperature_mk * 1e-3,
            None if nd.attenuator_temperature_mk is None else nd.attenuator_temperature_mk * 1e-3,
            tuple(segments),
        )))
    links = [
        guarded(f"links.{i}", lambda ld=ld: LinkSpec(ld.source, ld.target, ld.length_m, ld.attenuation_db_per_km, ld.bath, ld.profile_slices))
        for i, ld in enumerate(doc.links)
    ]
    sq = doc.squeeze
    r = sq.r if sq.r is not None else squeeze_factor_from_db(sq.squeeze_db)
    squeeze = SqueezeSpec(r, sq.angle_rad, sq.added_photons)
    sweep = None
    if doc.sweep is not None:
        fits = {name: hp.ResponseFit(f.a, f.b_k, f.c) for name, f in doc.sweep.fits.items()}
        sweep = guarded("sweep", lambda: SweepSpec(doc.sweep.mode, tuple(doc.sweep.center_temperatures_k), fits))
    heat = None
    if doc.heat is not None:
        heat = guarded("heat", lambda: heat_model_from_doc(doc.heat))
    if any(link.bath == "profile" for link in doc.links) and doc.heat is None:
        errors.append(("heat", "profile bath requires a heat section"))
    if errors:
        raise ConfigError(errors)
    config = ExperimentConfig(
        nodes=tuple(nodes),
        links=tuple(links),
        squeeze=squeeze,
        signal_frequency=doc.signal_frequency_ghz * 1e9,
        center_temperature=doc.center_temperature_mk * 1e-3,
        taps=tuple(doc.taps),
        sweep=sweep,
        heat=heat,
    )
    config.endpoints()
    return config


def load_experiment(path) -> ExperimentConfig:
    return experiment_config(load_document(path))


def shipped_config_path(name: str) -> Path:
    """Path of a configuration shipped with the package (``base_temperature`` etc.)."""
    path = Path(__file__).parent / "configs" / f"{name}.yaml"
    if not path.exists():
        raise FileNotFoundError(f"no shipped config named {name!r}")
    return path
