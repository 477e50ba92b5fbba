"""Scenario files: YAML documents validated against a JSON schema.

Validation errors carry the line of the offending key so that a user can
jump straight to it.  Example::

    leader:
      S0: [[0, 1], [-1, 0]]
      C0: [[1, 0]]
      v0: [1, 0]
    graph:
      edges: [[0, 1], [1, 2, 0.5]]
    gains: {mu_alpha: 10, mu_zeta: 200}
    sim: {dt: 1.0e-4, t_final: 20, seed: 0, init_range: [-1, 1]}
    observer: {kind: output_based}
"""

import re
from dataclasses import dataclass, field

import jsonschema
import numpy as np
import yaml

from .engine import InitSpec, Scenario
from .errors import ConfigError
from .graphnet import Digraph
from .leader import LeaderSystem
from .observers import Gains
from .riccati import RECOMPUTE_TOL


class _Loader(yaml.SafeLoader):
    pass


# PyYAML follows YAML 1.1 and reads "1e-4" as a string; accept it as a float
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*(?:\.[0-9_]*)?|\.[0-9_]+)[eE][-+]?[0-9]+$"""),
    list("-+0123456789."),
)

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_matrix = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _num}}
_vector = {"type": "array", "minItems": 1, "items": _num}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["leader", "graph", "gains"],
    "properties": {
        "leader": {
            "type": "object",
            "additionalProperties": False,
            "required": ["S0", "C0", "v0"],
            "properties": {"S0": _matrix, "C0": _matrix, "v0": _vector},
        },
        "graph": {
            "type": "object",
            "additionalProperties": False,
            "required": ["edges"],
            "properties": {
                "n_followers": {"type": "integer", "minimum": 1},
                "edges": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "minItems": 2,
                        "maxItems": 3,
                        "prefixItems": [{"type": "integer", "minimum": 0}, {"type": "integer", "minimum": 1},
                                        {"type": "number", "minimum": 0}],
                    },
                },
                "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
            },
        },
        "gains": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mu_alpha", "mu_zeta"],
            "properties": {k: _pos for k in ("mu_alpha", "mu_zeta", "mu_s", "mu_c", "mu_v")},
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": _pos,
                "t_final": _pos,
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "init_range": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
                "recompute_tol": _pos,
            },
        },
        "observer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"kind": {"enum": ["output_based", "state_based", "both"]}},
        },
    },
}


@dataclass
class ScenarioConfig:
    S0: list
    C0: list
    v0: list
    edges: list
    gains: dict
    n_followers: int = None
    dt: float = 1e-4
    t_final: float = 20.0
    seed: int = 0
    init_range: list = field(default_factory=lambda: [-1.0, 1.0])
    recompute_tol: float = RECOMPUTE_TOL
    kind: str = "output_based"

    @classmethod
    def from_dict(cls, data, lines=None):
        """Build from an already-parsed document.

        ``lines`` maps key paths to source lines for error messages.
        """
        _validate(data, lines or {})
        lead, graph, sim = data["leader"], data["graph"], data.get("sim", {})
        edges = [list(e) for e in graph["edges"]]
        if "weights" in graph:
            if len(graph["weights"]) != len(edges):
                raise ConfigError("graph.weights must have one entry per edge", _line(lines, ("graph", "weights")))
            edges = [e[:2] + [w] for e, w in zip(edges, graph["weights"])]
        nodes = [e[1] for e in edges] + [e[0] for e in edges]
        n_followers = graph.get("n_followers", max(nodes, default=0))
        for k, e in enumerate(edges):
            if e[0] == e[1] or max(e[0], e[1]) > n_followers:
                raise ConfigError(f"invalid edge {e[0]}->{e[1]} for {n_followers} followers",
                                  _line(lines, ("graph", "edges", k)))
        cfg = cls(
            S0=[list(map(float, r)) for r in lead["S0"]],
            C0=[list(map(float, r)) for r in lead["C0"]],
            v0=list(map(float, lead["v0"])),
            edges=edges,
            gains={k: float(v) for k, v in data["gains"].items()},
            n_followers=int(n_followers),
            dt=float(sim.get("dt", cls.dt)),
            t_final=float(sim.get("t_final", cls.t_final)),
            seed=int(sim.get("seed", cls.seed)),
            init_range=[float(x) for x in sim.get("init_range", [-1.0, 1.0])],
            recompute_tol=float(sim.get("recompute_tol", cls.recompute_tol)),
            kind=data.get("observer", {}).get("kind", cls.kind),
        )
        cfg._check_dimensions(lines or {})
        return cfg

    def _check_dimensions(self, lines):
        q = len(self.S0)
        if any(len(r) != q for r in self.S0):
            raise ConfigError("leader.S0 must be square", _line(lines, ("leader", "S0")))
        if any(len(r) != q for r in self.C0):
            raise ConfigError(f"leader.C0 rows must have {q} entries", _line(lines, ("leader", "C0")))
        if len(self.v0) != q:
            raise ConfigError(f"leader.v0 must have {q} entries", _line(lines, ("leader", "v0")))
        lo, hi = self.init_range
        if lo > hi:
            raise ConfigError("sim.init_range must be [lo, hi] with lo <= hi", _line(lines, ("sim", "init_range")))
        if self.t_final < self.dt:
            raise ConfigError("sim.t_final must be at least sim.dt", _line(lines, ("sim", "t_final")))

    def to_dict(self):
        return {
            "leader": {"S0": self.S0, "C0": self.C0, "v0": self.v0},
            "graph": {"n_followers": self.n_followers, "edges": self.edges},
            "gains": dict(self.gains),
            "sim": {"dt": self.dt, "t_final": self.t_final, "seed": self.seed,
                    "init_range": list(self.init_range), "recompute_tol": self.recompute_tol},
            "observer": {"kind": self.kind},
        }

    def dumps(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)

    def to_scenario(self):
        leader = LeaderSystem(np.array(self.S0), np.array(self.C0), np.array(self.v0))
        graph = Digraph.from_edges(self.n_followers, self.edges)
        return Scenario(
            leader=leader,
            graph=graph,
            gains=Gains(**self.gains),
            observer_kind=self.kind,
            init=InitSpec(range=tuple(self.init_range), seed=self.seed),
            dt=self.dt,
            t_final=self.t_final,
            recompute_tol=self.recompute_tol,
        )


def _line(lines, path):
    """Line of the deepest known ancestor of ``path`` (1-based), or None."""
    path = tuple(path)
    while path:
        if path in lines:
            return lines[path]
        path = path[:-1]
    return lines.get((), None)


def _collect_lines(node, path=(), out=None):
    out = {} if out is None else out
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            sub = path + (key.value,)
            out[sub] = key.start_mark.line + 1
            _collect_lines(value, sub, out)
            out[sub] = key.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for k, item in enumerate(node.value):
            _collect_lines(item, path + (k,), out)
    return out


def _validate(data, lines):
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping with sections leader, graph, gains, sim, observer", 1)
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (_line(lines, e.absolute_path) or 0, list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        path = tuple(err.absolute_path)
        if err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})), key=str)
            if extra:
                path = path + (extra[0],)
                where = ".".join(str(p) for p in path)
                raise ConfigError(f"unknown key {where!r}", _line(lines, path))
        where = ".".join(str(p) for p in path) or "<root>"
        raise ConfigError(f"{where}: {err.message}", _line(lines, path))


def parse_config(text):
    """Parse and validate a scenario document."""
    try:
        node = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed YAML: {getattr(exc, 'problem', exc)}", mark.line + 1 if mark else None) from exc
    if node is None:
        raise ConfigError("empty scenario file", 1)
    data = _Loader(text).get_single_data()
    return ScenarioConfig.from_dict(data, _collect_lines(node))


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config(text)
