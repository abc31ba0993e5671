"""
Scenario files: versioned YAML describing a control plane, its traffic, and the
model parameters of a simulation run.

A minimal scenario::

    version: 1
    rounds: 20
    controllers:
      - {id: 1, capacity: 1000}
      - {id: 2, capacity: 1000}
    switches:
      - {id: 1, owner: 1, rates: [[0, 300], [10, 600]]}
      - {id: 2, owner: 2, rate: 200}
    hops:            # one row per switch, in ascending controller id order
      1: [1, 2]
      2: [2, 1]

Optional top-level keys: `name`, `seed`, `trigger_threshold`, `traffic`
(`jitter`, `jitter_seed`), `cost`, `delay` and `rl` (fields of `CostModel`,
`DelayModel` and `RlConfig`). A switch entry may override `jitter`.
"""

from __future__ import annotations
from dataclasses import fields
from importlib import resources
import logging
from pathlib import Path

import yaml

from sdnbalance.core import Topology
from sdnbalance.costs import CostModel, DelayModel
from sdnbalance.rl import RlConfig
from sdnbalance.sim import Scenario, TrafficProfile

from typing import Any

__all__ = [
    "ScenarioError",
    "ScenarioParseError",
    "MissingFieldError",
    "DanglingIdError",
    "IncompleteHopMatrixError",
    "InvalidValueError",
    "SCENARIO_VERSION",
    "parse_scenario",
    "load_scenario",
    "bundled_scenarios",
    "bundled_scenario",
    "resolve_scenario",
]

logger = logging.getLogger(__name__)

SCENARIO_VERSION = 1


class ScenarioError(ValueError):
    """
    Base class for scenario validation errors. `line` is the 1-based line of
    the offending entry in the source file, or `None` if unknown.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ScenarioParseError(ScenarioError):
    "The file isn't well-formed YAML, or its layout isn't a scenario's."


class MissingFieldError(ScenarioError):
    pass


class DanglingIdError(ScenarioError):
    "An entry references a controller or switch id that isn't defined."


class IncompleteHopMatrixError(ScenarioError):
    pass


class InvalidValueError(ScenarioError):
    pass


class _Mapping(dict):
    "A YAML mapping that remembers where it and each of its keys start."

    def __init__(self, *args, line: int = 0):
        super().__init__(*args)
        self.line = line
        self.key_lines: dict = {}

    def line_of(self, key) -> int:
        return self.key_lines.get(key, self.line)


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader: _LineLoader, node: yaml.MappingNode) -> _Mapping:
    loader.flatten_mapping(node)
    try:
        mapping = _Mapping(loader.construct_pairs(node, deep=True), line=node.start_mark.line + 1)
    except TypeError as e:
        raise ScenarioParseError(f"Invalid mapping key: {e}", node.start_mark.line + 1) from None
    mapping.key_lines = {
        loader.construct_object(k, deep=True): k.start_mark.line + 1 for k, _ in node.value
    }
    return mapping


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _require(mapping: _Mapping, key: str, what: str) -> Any:
    if key not in mapping:
        raise MissingFieldError(f"{what} is missing the `{key}` field.", mapping.line)
    return mapping[key]


def _as_mapping(value: Any, line: int, what: str) -> _Mapping:
    if not isinstance(value, _Mapping):
        raise ScenarioParseError(f"{what} must be a mapping, got {type(value).__name__}.", line)
    return value


def _as_list(value: Any, line: int, what: str) -> list:
    if not isinstance(value, list):
        raise ScenarioParseError(f"{what} must be a list, got {type(value).__name__}.", line)
    return value


def _as_int(value: Any, line: int, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidValueError(f"{what} must be an integer, got {value!r}.", line)
    return value


def _as_number(value: Any, line: int, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidValueError(f"{what} must be a number, got {value!r}.", line)
    return float(value)


def _build(cls, section: Any, line: int, what: str):
    "Build one of the parameter dataclasses from an optional mapping section."
    if section is None:
        return cls()
    section = _as_mapping(section, line, what)

    known = {f.name for f in fields(cls)}
    unknown = sorted(str(k) for k in section if k not in known)
    if unknown:
        raise InvalidValueError(
            f"Unknown {what} fields {unknown}; expected some of {sorted(known)}.", section.line
        )
    try:
        return cls(**{k: v for k, v in section.items()})
    except (TypeError, ValueError) as e:
        raise InvalidValueError(f"Invalid {what}: {e}", section.line) from None


def _parse_controllers(doc: _Mapping) -> dict[int, float]:
    entries = _as_list(
        _require(doc, "controllers", "Scenario"), doc.line_of("controllers"), "`controllers`"
    )
    if not entries:
        raise InvalidValueError("At least one controller is required.", doc.line_of("controllers"))

    capacities: dict[int, float] = {}
    for entry in entries:
        entry = _as_mapping(entry, doc.line_of("controllers"), "A controller entry")
        cid = _as_int(_require(entry, "id", "Controller"), entry.line_of("id"), "Controller `id`")
        capacity = _as_number(
            _require(entry, "capacity", f"Controller {cid}"),
            entry.line_of("capacity"),
            "`capacity`",
        )
        if cid in capacities:
            raise InvalidValueError(f"Duplicate controller id {cid}.", entry.line)
        if not capacity > 0:
            raise InvalidValueError(
                f"Controller {cid} capacity must be > 0, got {capacity}.", entry.line_of("capacity")
            )
        capacities[cid] = capacity

    return capacities


def _parse_rates(entry: _Mapping, sid: int) -> tuple[tuple[int, float], ...]:
    if "rates" in entry:
        line = entry.line_of("rates")
        points = []
        for point in _as_list(entry["rates"], line, f"Switch {sid} `rates`"):
            point = _as_list(point, line, f"A switch {sid} rate breakpoint")
            if len(point) != 2:
                raise InvalidValueError(
                    f"Rate breakpoints are [round, rate] pairs, got {point!r}.", line
                )
            points.append(
                (_as_int(point[0], line, "Breakpoint round"), _as_number(point[1], line, "Rate"))
            )
        return tuple(points)

    rate = _as_number(_require(entry, "rate", f"Switch {sid}"), entry.line_of("rate"), "`rate`")
    return ((0, rate),)


def _parse_switches(
    doc: _Mapping, capacities: dict[int, float], jitter: float, jitter_seed: int
) -> tuple[dict[int, int], dict[int, TrafficProfile], dict[int, int]]:
    entries = _as_list(
        _require(doc, "switches", "Scenario"), doc.line_of("switches"), "`switches`"
    )

    owners: dict[int, int] = {}
    traffic: dict[int, TrafficProfile] = {}
    lines: dict[int, int] = {}
    for entry in entries:
        entry = _as_mapping(entry, doc.line_of("switches"), "A switch entry")
        sid = _as_int(_require(entry, "id", "Switch"), entry.line_of("id"), "Switch `id`")
        owner = _as_int(
            _require(entry, "owner", f"Switch {sid}"), entry.line_of("owner"), "`owner`"
        )
        if sid in owners:
            raise InvalidValueError(f"Duplicate switch id {sid}.", entry.line)
        if owner not in capacities:
            raise DanglingIdError(
                f"Switch {sid} is owned by undefined controller {owner}.", entry.line_of("owner")
            )

        switch_jitter = jitter
        if "jitter" in entry:
            switch_jitter = _as_number(entry["jitter"], entry.line_of("jitter"), "`jitter`")

        try:
            traffic[sid] = TrafficProfile(
                _parse_rates(entry, sid), jitter=switch_jitter, jitter_seed=jitter_seed
            )
        except ValueError as e:
            if isinstance(e, ScenarioError):
                raise
            raise InvalidValueError(f"Switch {sid}: {e}", entry.line) from None

        owners[sid] = owner
        lines[sid] = entry.line

    if not owners:
        raise InvalidValueError("At least one switch is required.", doc.line_of("switches"))
    return owners, traffic, lines


def _parse_hops(
    doc: _Mapping, capacities: dict[int, float], owners: dict[int, int], switch_lines: dict[int, int]
) -> dict[tuple[int, int], int]:
    rows = _as_mapping(_require(doc, "hops", "Scenario"), doc.line_of("hops"), "`hops`")
    controller_ids = sorted(capacities)

    hops: dict[tuple[int, int], int] = {}
    for key, row in rows.items():
        line = rows.line_of(key)
        sid = _as_int(key, line, "Hop matrix row key")
        if sid not in owners:
            raise DanglingIdError(f"Hop matrix row for undefined switch {sid}.", line)

        row = _as_list(row, line, f"Hop row of switch {sid}")
        if len(row) != len(controller_ids):
            raise IncompleteHopMatrixError(
                f"Hop row of switch {sid} has {len(row)} entries, "
                f"expected one per controller ({len(controller_ids)}).",
                line,
            )
        for cid, h in zip(controller_ids, row):
            h = _as_int(h, line, f"Hop count (switch {sid}, controller {cid})")
            if h < 1:
                raise InvalidValueError(
                    f"Hop count (switch {sid}, controller {cid}) must be >= 1, got {h}.", line
                )
            hops[(sid, cid)] = h

    missing = sorted(set(owners) - {s for s, _ in hops})
    if missing:
        raise IncompleteHopMatrixError(
            f"Hop matrix has no row for switches {missing}.", switch_lines[missing[0]]
        )
    return hops


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    """
    Parse and validate a scenario document.

    Parameters
    ----------
    text
        YAML source.
    name
        Scenario name, used when the document has no `name` field.

    Raises
    ------
    ScenarioError
        A subclass naming the kind of problem, with the line it was found on.
    """
    try:
        doc = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ScenarioParseError(
            f"Invalid YAML: {getattr(e, 'problem', None) or e}",
            mark.line + 1 if mark is not None else None,
        ) from None

    if doc is None:
        raise ScenarioParseError("Scenario file is empty.", 1)
    doc = _as_mapping(doc, 1, "A scenario")

    version = _require(doc, "version", "Scenario")
    if version != SCENARIO_VERSION:
        raise InvalidValueError(
            f"Unsupported scenario version {version!r}; expected {SCENARIO_VERSION}.",
            doc.line_of("version"),
        )

    capacities = _parse_controllers(doc)

    traffic_section = _as_mapping(
        doc.get("traffic", _Mapping()), doc.line_of("traffic"), "`traffic`"
    )
    jitter = _as_number(traffic_section.get("jitter", 0.0), traffic_section.line_of("jitter"), "`jitter`")
    jitter_seed = _as_int(
        traffic_section.get("jitter_seed", 0), traffic_section.line_of("jitter_seed"), "`jitter_seed`"
    )

    owners, traffic, switch_lines = _parse_switches(doc, capacities, jitter, jitter_seed)
    hops = _parse_hops(doc, capacities, owners, switch_lines)

    rates = {s: profile.base_rate(0) for s, profile in traffic.items()}
    try:
        topology = Topology.from_mappings(capacities, owners, rates, hops)
    except ValueError as e:
        raise InvalidValueError(str(e), doc.line_of("controllers")) from None

    rounds = _as_int(_require(doc, "rounds", "Scenario"), doc.line_of("rounds"), "`rounds`")
    if rounds < 1:
        raise InvalidValueError(f"`rounds` must be >= 1, got {rounds}.", doc.line_of("rounds"))
    threshold = _as_number(
        doc.get("trigger_threshold", 0.3), doc.line_of("trigger_threshold"), "`trigger_threshold`"
    )
    if threshold < 0:
        raise InvalidValueError(
            f"`trigger_threshold` must be >= 0, got {threshold}.", doc.line_of("trigger_threshold")
        )

    scenario = Scenario(
        topology=topology,
        traffic=traffic,
        cost_model=_build(CostModel, doc.get("cost"), doc.line_of("cost"), "cost model"),
        delay_model=_build(DelayModel, doc.get("delay"), doc.line_of("delay"), "delay model"),
        rl=_build(RlConfig, doc.get("rl"), doc.line_of("rl"), "RL config"),
        trigger_threshold=threshold,
        rounds=rounds,
        seed=_as_int(doc.get("seed", 0), doc.line_of("seed"), "`seed`"),
        name=str(doc.get("name", name)),
    )
    logger.debug(
        "Parsed scenario %s: %d controllers, %d switches, %d rounds.",
        scenario.name,
        len(capacities),
        len(owners),
        rounds,
    )
    return scenario


def load_scenario(path: str | Path) -> Scenario:
    """
    Load and validate a scenario file. The file's stem is the default name.

    Raises
    ------
    OSError
        If the file can't be read.
    ScenarioError
        If it isn't a valid scenario.
    """
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), name=path.stem)


def bundled_scenarios() -> list[str]:
    "Names of the scenarios shipped with the package."
    root = resources.files("sdnbalance.experiments") / "scenarios"
    return sorted(p.name.removesuffix(".yaml") for p in root.iterdir() if p.name.endswith(".yaml"))


def bundled_scenario(name: str) -> Scenario:
    """
    Load a scenario shipped with the package, e.g. `"fig4"`.

    Raises
    ------
    KeyError
        If there's no bundled scenario by that name.
    """
    if name not in bundled_scenarios():
        raise KeyError(f"No bundled scenario {name!r}; available: {bundled_scenarios()}.")
    source = resources.files("sdnbalance.experiments") / "scenarios" / f"{name}.yaml"
    return parse_scenario(source.read_text(encoding="utf-8"), name=name)


def resolve_scenario(source: str | Path) -> Scenario:
    """
    Load a scenario from a file path, falling back to a bundled scenario name.

    Raises
    ------
    FileNotFoundError
        If `source` is neither an existing file nor a bundled scenario.
    """
    path = Path(source)
    if path.is_file():
        return load_scenario(path)
    if str(source) in bundled_scenarios():
        return bundled_scenario(str(source))
    raise FileNotFoundError(f"No scenario file or bundled scenario named {str(source)!r}.")
