"""Scenario files: a JSON document pointing at .aut files plus event roles.

Example::

    {
      "name": "water_tank",
      "plant": "plant.aut",
      "bad_state": "S5",
      "observations": "observations.aut",
      "supervisor": "supervisor.aut",
      "controllable": ["open", "close"],
      "observable": ["L", "H", "EL", "EH", "open", "close"],
      "attack": {
        "compromised_sensors": {"L": ["L", "H"], "H": ["H", "L"]},
        "compromised_actuators": ["open"]
      }
    }

Paths are relative to the JSON file. ``supervisor`` is optional.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .autfile import parse_aut
from .automata import AutomatonError
from .constructions import AttackConstraint, ConstructionError, ControlConstraint, Scenario


class ScenarioError(AutomatonError):
    """Unreadable or inconsistent scenario file."""


_REQUIRED = ("plant", "bad_state", "observations", "controllable", "observable", "attack")


def _names(value: Any, what: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ScenarioError(f"'{what}' must be a list of event names")
    return value


def scenario_from_dict(doc: Mapping[str, Any], base: Path) -> Scenario:
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise ScenarioError(f"scenario lacks {', '.join(missing)}")

    def load(key: str):
        path = base / doc[key]
        try:
            return parse_aut(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ScenarioError(f"cannot read {key} file {path}: {exc.strerror}") from None

    plant = load("plant")
    observations = load("observations")
    supervisor = load("supervisor") if doc.get("supervisor") else None
    ctrl = _names(doc["controllable"], "controllable")
    obs = _names(doc["observable"], "observable")
    attack = doc["attack"]
    if not isinstance(attack, Mapping):
        raise ScenarioError("'attack' must be an object")
    sensors = attack.get("compromised_sensors", {})
    if not isinstance(sensors, Mapping):
        raise ScenarioError("'compromised_sensors' must map each sensor to its replacements")
    actuators = _names(attack.get("compromised_actuators", []), "compromised_actuators")
    events = plant.alphabet.names
    declared = set(ctrl) | set(obs) | set(sensors) | set(actuators)
    for row in sensors.values():
        declared |= set(_names(row, "compromised_sensors row"))
    unknown = declared - set(events)
    if unknown:
        raise ScenarioError(f"declared events not in the plant alphabet: {sorted(unknown)}")
    try:
        control = ControlConstraint(events, frozenset(ctrl), frozenset(obs))
        sens_order = tuple(e for e in events if e in sensors)
        t = AttackConstraint(frozenset(obs), frozenset(actuators), sens_order,
                             {s: frozenset(sensors[s]) for s in sens_order})
        scn = Scenario(plant, doc["bad_state"], control, observations, t, supervisor,
                       str(doc.get("name", "scenario")))
        scn.validate()
    except ConstructionError as exc:
        raise ScenarioError(str(exc)) from None
    return scn


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{path}: top level must be an object")
    return scenario_from_dict(doc, path.parent)


def bundled_path(name: str) -> Path:
    """Path of a scenario shipped with the package (``water_tank``, ``uncontrollable_damage``)."""
    path = Path(str(resources.files("covertsyn") / "data" / name / "scenario.json"))
    if not path.is_file():
        raise ScenarioError(f"no bundled scenario {name!r}")
    return path


def bundled_scenario(name: str) -> Scenario:
    return load_scenario(bundled_path(name))
