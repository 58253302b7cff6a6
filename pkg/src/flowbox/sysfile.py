"""YAML system files.

Keys: ``name``, ``variables``, ``field_generators`` (list of component
lists), ``ideal``, ``divisor``, ``points`` and an optional ``analytic``
section with ``field``, ``ideal`` and ``domain``.  Polynomial entries follow
the polynomial grammar; ``h``, ``sin`` and ``cos`` are accepted only inside
``analytic``.
"""
from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import yaml

from .analytic import AnalyticField, AnalyticMap, AnalyticSyntaxError
from .geometry import Distribution, FoliatedSystem, VectorField
from .polyring import Ideal, PolynomialSyntaxError, parse_polynomial

__all__ = ["SystemFile", "SystemFileError", "parse_system", "load_text", "dump_system", "bundled", "resolve_path"]

BUNDLED = ("example1.sys", "example2.sys", "counterexample4d.sys", "remark5d.sys", "split_demo.sys")


class SystemFileError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None, source: str = "<string>"):
        loc = f"{source}:{line}:{column}: " if line is not None else f"{source}: "
        super().__init__(loc + message)
        self.line = line
        self.column = column


@dataclass
class SystemFile:
    name: str
    variables: tuple
    system: FoliatedSystem
    points: list
    digest: str
    source: str = "<string>"
    analytic_field: AnalyticField | None = None
    analytic_ideal: AnalyticMap | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def ideal_evals(self):
        """Equations of X for numeric work: the analytic ones when given."""
        return self.analytic_ideal if self.analytic_ideal is not None else self.system.ideal

    def field(self, index: int = 0):
        if self.analytic_field is not None and index == 0:
            return self.analytic_field
        return self.system.theta[index]


def bundled(name: str) -> Path:
    return Path(str(resources.files("flowbox") / "data" / name))


def resolve_path(path: str) -> Path:
    """A filesystem path, falling back to the bundled example of that name."""
    p = Path(path)
    if p.exists():
        return p
    cand = bundled(p.name if p.suffix else p.name + ".sys")
    if cand.exists():
        return cand
    raise FileNotFoundError(path)


def _node_map(node):
    """Map of key -> value node for a YAML mapping node."""
    return {k.value: v for k, v in node.value} if isinstance(node, yaml.MappingNode) else {}


def _scalars(node):
    if isinstance(node, yaml.SequenceNode):
        return node.value
    return []


def _text(node, source):
    if not isinstance(node, yaml.ScalarNode):
        raise SystemFileError("expected a scalar expression", node.start_mark.line + 1, node.start_mark.column + 1, source)
    return node.value


def _poly(node, variables, source):
    text = _text(node, source)
    try:
        return parse_polynomial(text, variables)
    except PolynomialSyntaxError as e:
        quote = 1 if node.style in ("'", '"') else 0
        raise SystemFileError(str(e), node.start_mark.line + 1, node.start_mark.column + quote + e.column, source) from None


def _analytic(node, variables, source):
    text = _text(node, source)
    try:
        from .analytic import parse_analytic

        return parse_analytic(text, variables)
    except AnalyticSyntaxError as e:
        raise SystemFileError(str(e), node.start_mark.line + 1, node.start_mark.column + 1, source) from None


def load_text(text: str, source: str = "<string>", validate: bool = True) -> SystemFile:
    """Parse system-file text; errors carry line and column."""
    try:
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as e:
        m = e.problem_mark
        raise SystemFileError(e.problem or str(e), m.line + 1 if m else None, m.column + 1 if m else None, source) from None
    if root is None:
        raise SystemFileError("empty system file", source=source)
    top = _node_map(root)
    if not top:
        raise SystemFileError("top level must be a mapping", root.start_mark.line + 1, root.start_mark.column + 1, source)
    for key in ("variables", "field_generators"):
        if key not in top:
            raise SystemFileError(f"missing required key '{key}'", root.start_mark.line + 1, 1, source)
    variables = tuple(_text(n, source) for n in _scalars(top["variables"]))
    if not variables or len(set(variables)) != len(variables):
        raise SystemFileError("variables must be a nonempty list of distinct names", top["variables"].start_mark.line + 1, 1, source)
    gens = []
    for gnode in _scalars(top["field_generators"]):
        comps = _scalars(gnode)
        if len(comps) != len(variables):
            raise SystemFileError(
                f"field generator has {len(comps)} components, expected {len(variables)}",
                gnode.start_mark.line + 1,
                gnode.start_mark.column + 1,
                source,
            )
        gens.append(VectorField([_poly(c, variables, source) for c in comps]))
    if not gens:
        raise SystemFileError("at least one field generator is required", source=source)
    ideal = Ideal([_poly(n, variables, source) for n in _scalars(top.get("ideal"))], variables)
    divisor = [_poly(n, variables, source) for n in _scalars(top.get("divisor"))]
    points = []
    for pnode in _scalars(top.get("points")):
        coords = []
        for c in _scalars(pnode):
            t = _text(c, source)
            try:
                coords.append(Fraction(t))
            except ValueError:
                raise SystemFileError(f"bad rational coordinate {t!r}", c.start_mark.line + 1, c.start_mark.column + 1, source) from None
            if "." in t or "e" in t.lower():
                raise SystemFileError(f"floating-point coordinate {t!r} not allowed", c.start_mark.line + 1, c.start_mark.column + 1, source)
        if len(coords) != len(variables):
            raise SystemFileError("point dimension mismatch", pnode.start_mark.line + 1, pnode.start_mark.column + 1, source)
        points.append(tuple(coords))
    name_node = top.get("name")
    name = name_node.value if isinstance(name_node, yaml.ScalarNode) else Path(source).stem
    try:
        system = FoliatedSystem(variables, Distribution(gens), ideal, tuple(divisor), tuple(points), name, validate)
    except ValueError as e:
        raise SystemFileError(str(e), source=source) from None
    afield = aideal = None
    an = _node_map(top.get("analytic")) if "analytic" in top else {}
    if an:
        domain = None
        if "domain" in an:
            domain = []
            for d in _scalars(an["domain"]):
                lo, hi = (_analytic(x, (), source) for x in _scalars(d))
                domain.append((float(lo), float(hi)))
        if "field" in an:
            exprs = [_analytic(n, variables, source) for n in _scalars(an["field"])]
            afield = AnalyticField(variables, exprs, domain)
        if "ideal" in an:
            aideal = AnalyticMap(variables, [_analytic(n, variables, source) for n in _scalars(an["ideal"])], domain)
    digest = "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()
    raw = yaml.safe_load(text)
    return SystemFile(name, variables, system, points, digest, source, afield, aideal, raw)


def parse_system(path, validate: bool = True) -> SystemFile:
    p = resolve_path(str(path))
    text = p.read_bytes().decode("utf-8")
    return load_text(text, str(p), validate)


def _q(s: str) -> str:
    return '"' + s + '"'


def dump_system(system: FoliatedSystem, name: str | None = None) -> str:
    """Serialize a polynomial system in the file format."""
    out = io.StringIO()
    out.write(f"name: {name or system.name or 'system'}\n")
    out.write("variables: [" + ", ".join(system.variables) + "]\n")
    out.write("field_generators:\n")
    for g in system.theta:
        out.write("  - [" + ", ".join(_q(str(c)) for c in g.components) + "]\n")
    out.write("ideal: [" + ", ".join(_q(str(g)) for g in system.ideal.generators) + "]\n")
    out.write("divisor: [" + ", ".join(_q(str(e)) for e in system.divisor) + "]\n")
    return out.getvalue()
