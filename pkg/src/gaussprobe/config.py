"""INI-style run configuration.

One section per scenario, named after it, plus an optional ``[physical]`` section::

    [scalar_magnetometry]
    tau = 1e-8
    duration = 5e-3
    kappa_tau_sq = 0.0183
    mu_tau = 8.8e-4
    decay = false

Coupling keys may be given per segment (``kappa_tau_sq``, ``kappa_tau``, ``mu_tau``)
or as rates (``kappa_sq`` in 1/s, ``mu`` in 1/s); rates are multiplied by ``tau``.
Anything not given directly is derived from ``[physical]`` when that section exists.
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path

from .errors import ConfigError
from .scenarios import SCENARIOS, PhysicalParams, ScenarioConfig, derive_couplings

FLOAT_KEYS = ("tau", "duration", "kappa_tau_sq", "mu_tau", "eta", "epsilon", "squeeze_r", "var_b0",
              "b_conj_var")
INT_KEYS = ("n_slices", "seed", "record_every")
BOOL_KEYS = ("decay", "kappa_feedback")
STR_KEYS = ("segment", "vector_mode")
ALIASES = ("kappa_sq", "kappa_tau", "mu")
SCENARIO_KEYS = set(FLOAT_KEYS + INT_KEYS + BOOL_KEYS + STR_KEYS + ALIASES + ("kappa_weights",))
PHYSICAL_KEYS = {f.name for f in dataclasses.fields(PhysicalParams)} - {"tau"}
PHYSICAL_REQUIRED = {"gamma", "lam", "delta", "area", "phi", "n_atoms"}


def _float(section, key):
    try:
        return section.getfloat(key)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def _read(text: str, source: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return parser


def _physical(parser, tau: float):
    if not parser.has_section("physical"):
        return None
    sec = parser["physical"]
    unknown = set(sec) - PHYSICAL_KEYS
    if unknown:
        raise ConfigError(f"unknown key(s) in [physical]: {sorted(unknown)}")
    missing = PHYSICAL_REQUIRED - set(sec)
    if missing:
        raise ConfigError(f"missing key(s) in [physical]: {sorted(missing)}")
    try:
        return PhysicalParams(tau=tau, **{k: _float(sec, k) for k in sec})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config_text(text: str, scenario: str | None = None,
                      source: str = "<config>") -> ScenarioConfig:
    """Parse config text; ``scenario`` picks the section when several are present."""
    parser = _read(text, source)
    sections = [s for s in parser.sections() if s != "physical"]
    unknown = [s for s in sections if s not in SCENARIOS]
    if unknown:
        raise ConfigError(f"unknown section(s) {unknown}; scenarios are {list(SCENARIOS)}")
    if scenario is None:
        if len(sections) != 1:
            raise ConfigError(f"expected one scenario section, found {sections}")
        scenario = sections[0]
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    if scenario not in sections:
        raise ConfigError(f"config has no [{scenario}] section")
    sec = parser[scenario]
    bad = set(sec) - SCENARIO_KEYS
    if bad:
        raise ConfigError(f"unknown key(s) in [{scenario}]: {sorted(bad)}")
    for key in ("tau", "duration"):
        if key not in sec:
            raise ConfigError(f"missing required key {key!r} in [{scenario}]")

    kw = {"scenario": scenario}
    for k in FLOAT_KEYS:
        if k in sec:
            kw[k] = _float(sec, k)
    for k in INT_KEYS:
        if k in sec:
            try:
                kw[k] = sec.getint(k)
            except ValueError as exc:
                raise ConfigError(f"{k}: {exc}") from None
    for k in BOOL_KEYS:
        if k in sec:
            try:
                kw[k] = sec.getboolean(k)
            except ValueError as exc:
                raise ConfigError(f"{k}: {exc}") from None
    for k in STR_KEYS:
        if k in sec:
            kw[k] = sec[k].strip()
    if "kappa_weights" in sec:
        try:
            kw["kappa_weights"] = tuple(float(w) for w in sec["kappa_weights"].split(","))
        except ValueError as exc:
            raise ConfigError(f"kappa_weights: {exc}") from None

    tau = kw["tau"]
    given = [k for k in ("kappa_tau_sq", "kappa_sq", "kappa_tau") if k in sec]
    if len(given) > 1:
        raise ConfigError(f"give only one of {given}")
    if "kappa_sq" in sec:
        kw["kappa_tau_sq"] = _float(sec, "kappa_sq") * tau
    elif "kappa_tau" in sec:
        kw["kappa_tau_sq"] = _float(sec, "kappa_tau") ** 2
    if "mu" in sec:
        if "mu_tau" in sec:
            raise ConfigError("give only one of ['mu', 'mu_tau']")
        kw["mu_tau"] = _float(sec, "mu") * tau

    warnings = []
    phys = _physical(parser, tau)
    if phys is not None:
        kw["physical"] = phys
        derived = derive_couplings(phys)
        values = {"kappa_tau_sq": derived.kappa_tau ** 2, "eta": derived.eta,
                  "epsilon": derived.epsilon, "mu_tau": derived.mu_tau}
        overridden = [k for k in values if k in kw]
        for k, v in values.items():
            kw.setdefault(k, v)
        if "var_b0" not in kw:
            kw["var_b0"] = phys.var_b0
        if overridden:
            warnings.append(f"direct values override physical derivation for {overridden}")
    elif "kappa_tau_sq" not in kw:
        raise ConfigError(f"missing required coupling in [{scenario}]: give kappa_tau_sq, "
                          "kappa_sq or kappa_tau, or a [physical] section")
    kw["warnings"] = tuple(warnings)
    try:
        return ScenarioConfig(**kw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(path, scenario: str | None = None) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), scenario, source=str(path))


def emit_config(cfg: ScenarioConfig) -> str:
    """Canonical text with every field explicit; ``parse_config_text`` inverts it."""
    lines = [f"[{cfg.scenario}]"]
    for k in FLOAT_KEYS:
        lines.append(f"{k} = {float(getattr(cfg, k))!r}")
    for k in INT_KEYS:
        lines.append(f"{k} = {getattr(cfg, k)}")
    for k in BOOL_KEYS:
        lines.append(f"{k} = {str(getattr(cfg, k)).lower()}")
    for k in STR_KEYS:
        lines.append(f"{k} = {getattr(cfg, k)}")
    if cfg.kappa_weights:
        lines.append("kappa_weights = " + ", ".join(repr(float(w)) for w in cfg.kappa_weights))
    if cfg.physical is not None:
        lines.append("")
        lines.append("[physical]")
        for f in dataclasses.fields(PhysicalParams):
            if f.name != "tau":
                lines.append(f"{f.name} = {float(getattr(cfg.physical, f.name))!r}")
    return "\n".join(lines) + "\n"


def config_snapshot(cfg: ScenarioConfig) -> dict:
    snap = dataclasses.asdict(cfg)
    snap.pop("warnings")
    snap["kappa_weights"] = list(cfg.kappa_weights)
    return snap
