"""Line-oriented text format for router-network circuits.

A ``.circuit`` document declares modes, injects photons, lists elements in
schedule order and names post-selections and detection patterns:

    mode SA A none shutter
    mode PA A t1 probe_in
    source SA 1
    bs 0.5 PA PB          # beamsplitter, reflectivity first
    pqr reflect PA RA SA  # orientation, probe_in, probe_out, control
    postselect_state SA 0.5773502691896258 SB 0+0.5773502691896258i
    detect spd2 RA=1

Comments run from ``#`` to end of line.  Complex weights are written
``a+bi`` with optional parts (``1``, ``0.5i``, ``1-0.5i``).  Parsing is a
pure function of the text; rendering produces a canonical form whose
re-parse is structurally identical.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

from .elements import (
    RouterOrientation,
    apply_schedule,
    beamsplitter,
    ns_single,
    ns_two_mode,
    phase_shifter,
    pqr_ideal,
    relabel,
    tunneling,
)
from .errors import CompileError
from .fock import (
    Box,
    FockState,
    ModeLabel,
    Role,
    TimeSlot,
    postselect_subsystem,
    project_pattern,
    register_modes,
    superposition_source,
)

_WEIGHT_NORM_TOL = 1e-9

_BOX_TAGS = {"A": Box.A, "B": Box.B, "C": Box.C, "aux": Box.AUX}
_TIME_TAGS = {t.value: t for t in TimeSlot}
_ROLE_TAGS = {r.value: r for r in Role}

_REAL = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_SIGNED_REAL = r"[+-](?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_REAL_RE = re.compile(rf"^{_REAL}$")
_COMPLEX_RE = re.compile(rf"^({_REAL})({_SIGNED_REAL})i$")
_IMAG_RE = re.compile(rf"^({_REAL})i$")
_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_ASSIGN_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)=(\d+)$")


class ParseError(Exception):
    """Parse failure with a 1-based position and the offending token."""

    def __init__(self, line, column, message, token=""):
        super().__init__(f"line {line}:{column}: {message}")
        self.line = line
        self.column = column
        self.message = message
        self.token = token


@dataclass(frozen=True)
class ModeDecl:
    name: str
    box: str
    time_slot: str
    role: str


@dataclass(frozen=True)
class SourceStmt:
    weights: tuple  # ((mode_name, complex), ...)


@dataclass(frozen=True)
class ElementStmt:
    op: str
    params: tuple  # numeric parameters / orientation keyword
    modes: tuple


@dataclass(frozen=True)
class PostselectPattern:
    pattern: tuple  # ((mode_name, int), ...)


@dataclass(frozen=True)
class PostselectState:
    weights: tuple


@dataclass(frozen=True)
class DetectStmt:
    name: str
    pattern: tuple


@dataclass(frozen=True)
class CircuitDoc:
    modes: tuple
    sources: tuple
    elements: tuple
    postselects: tuple  # PostselectPattern | PostselectState, in order
    detects: tuple


_ELEMENT_ARITY = {
    # op: (number of leading numeric params, number of mode arguments)
    "bs": (1, 2),
    "ps": (1, 1),
    "ns": (0, 1),
    "ns2": (0, 2),
    "relabel": (0, 2),
    "tunnel": (1, 2),
}

_MODE_WORDS = {1: "one mode", 2: "two modes", 3: "three modes"}


def parse_weight(token):
    """Parse a complex literal of the form REAL, REALi or REAL±REALi."""
    m = _COMPLEX_RE.match(token)
    if m:
        return complex(float(m.group(1)), float(m.group(2)))
    m = _IMAG_RE.match(token)
    if m:
        return complex(0.0, float(m.group(1)))
    if _REAL_RE.match(token):
        return complex(float(token), 0.0)
    return None


def render_weight(value):
    """Canonical complex literal; floats keep full round-trip precision."""
    re_part, im_part = value.real, value.imag
    if im_part == 0.0:
        return repr(re_part)
    if re_part == 0.0:
        return f"{im_part!r}i"
    sign = "+" if im_part >= 0 else "-"
    return f"{re_part!r}{sign}{abs(im_part)!r}i"


class _LineParser:
    def __init__(self, line_number, text):
        self.line_number = line_number
        self.text = text
        self.tokens = []
        for m in re.finditer(r"\S+", text):
            self.tokens.append((m.group(0), m.start() + 1))
        self.pos = 0

    def fail(self, message, token=""):
        column = (
            self.tokens[self.pos][1]
            if self.pos < len(self.tokens)
            else len(self.text) + 1
        )
        raise ParseError(self.line_number, column, message, token)

    def next(self, expected):
        if self.pos >= len(self.tokens):
            self.fail(f"expected {expected}")
        token, _ = self.tokens[self.pos]
        self.pos += 1
        return token

    def rest(self, expected):
        if self.pos >= len(self.tokens):
            self.fail(f"expected {expected}")
        remaining = [t for t, _ in self.tokens[self.pos :]]
        self.pos = len(self.tokens)
        return remaining

    @property
    def exhausted(self):
        return self.pos >= len(self.tokens)


def _parse_pairs(parser, items, what):
    if len(items) % 2 != 0 or not items:
        parser.fail(f"{what} takes mode/weight pairs")
    pairs = []
    for name, raw in zip(items[::2], items[1::2]):
        if not _IDENT_RE.match(name):
            parser.fail(f"invalid mode name {name!r}", name)
        weight = parse_weight(raw)
        if weight is None:
            parser.fail(f"invalid complex weight {raw!r}", raw)
        pairs.append((name, weight))
    return pairs


def _normalize_pairs(pairs, line_number, what):
    total = sum(abs(w) ** 2 for _, w in pairs)
    if total == 0.0:
        raise ParseError(line_number, 1, f"{what} weights are all zero")
    if abs(total - 1.0) > _WEIGHT_NORM_TOL:
        warnings.warn(
            f"line {line_number}: {what} weights normalized "
            f"(sum of squares was {total:.12g})",
            stacklevel=2,
        )
        scale = total**-0.5
        pairs = [(n, w * scale) for n, w in pairs]
    return tuple(pairs)


def parse(text):
    """Parse a circuit document; raises :class:`ParseError` on the first
    violation."""
    modes, sources, elements, postselects, detects = [], [], [], [], []
    declared = set()

    def require_declared(parser, name):
        if name not in declared:
            parser.fail(f"undeclared mode {name!r}", name)

    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        parser = _LineParser(line_number, line)
        directive = parser.next("a directive")

        if directive == "mode":
            name = parser.next("a mode name")
            if not _IDENT_RE.match(name):
                parser.fail(f"invalid mode name {name!r}", name)
            if name in declared:
                parser.fail(f"duplicate declaration of mode {name!r}", name)
            box = parser.next("a box tag (A, B, C or aux)")
            if box not in _BOX_TAGS:
                parser.fail(f"unknown box tag {box!r}", box)
            slot = parser.next("a time tag (t1, t2, t3, tf or none)")
            if slot not in _TIME_TAGS:
                parser.fail(f"unknown time tag {slot!r}", slot)
            role = parser.next("a role tag")
            if role not in _ROLE_TAGS:
                parser.fail(f"unknown role tag {role!r}", role)
            if not parser.exhausted:
                parser.fail("trailing tokens after mode declaration")
            declared.add(name)
            modes.append(ModeDecl(name, box, slot, role))

        elif directive == "source":
            items = parser.rest("mode/weight pairs")
            pairs = _parse_pairs(parser, items, "source")
            for name, _ in pairs:
                require_declared(parser, name)
            sources.append(
                SourceStmt(_normalize_pairs(pairs, line_number, "source"))
            )

        elif directive in _ELEMENT_ARITY:
            n_params, n_modes = _ELEMENT_ARITY[directive]
            params = []
            for _ in range(n_params):
                token = parser.next("a real parameter")
                if not _REAL_RE.match(token):
                    parser.fail(f"invalid real literal {token!r}", token)
                params.append(float(token))
            mode_args = []
            for _ in range(n_modes):
                if parser.exhausted:
                    parser.fail(
                        f"{directive} requires {_MODE_WORDS[n_modes]}"
                    )
                token = parser.next("a mode name")
                require_declared(parser, token)
                mode_args.append(token)
            if not parser.exhausted:
                parser.fail(f"trailing tokens after {directive}")
            elements.append(
                ElementStmt(directive, tuple(params), tuple(mode_args))
            )

        elif directive == "pqr":
            orientation = parser.next("an orientation (reflect or transmit)")
            if orientation not in ("reflect", "transmit"):
                parser.fail(
                    f"unknown orientation {orientation!r}", orientation
                )
            mode_args = []
            for _ in range(3):
                if parser.exhausted:
                    parser.fail("pqr requires three modes")
                token = parser.next("a mode name")
                require_declared(parser, token)
                mode_args.append(token)
            if not parser.exhausted:
                parser.fail("trailing tokens after pqr")
            elements.append(
                ElementStmt("pqr", (orientation,), tuple(mode_args))
            )

        elif directive == "postselect":
            items = parser.rest("mode=count pairs")
            pattern = []
            for item in items:
                m = _ASSIGN_RE.match(item)
                if not m:
                    parser.fail(
                        f"expected mode=count, got {item!r}", item
                    )
                require_declared(parser, m.group(1))
                pattern.append((m.group(1), int(m.group(2))))
            postselects.append(PostselectPattern(tuple(pattern)))

        elif directive == "postselect_state":
            items = parser.rest("mode/weight pairs")
            pairs = _parse_pairs(parser, items, "postselect_state")
            for name, _ in pairs:
                require_declared(parser, name)
            postselects.append(
                PostselectState(
                    _normalize_pairs(pairs, line_number, "postselect_state")
                )
            )

        elif directive == "detect":
            name = parser.next("an outcome name")
            if not _IDENT_RE.match(name):
                parser.fail(f"invalid outcome name {name!r}", name)
            items = parser.rest("mode=count pairs")
            pattern = []
            for item in items:
                m = _ASSIGN_RE.match(item)
                if not m:
                    parser.fail(f"expected mode=count, got {item!r}", item)
                require_declared(parser, m.group(1))
                pattern.append((m.group(1), int(m.group(2))))
            detects.append(DetectStmt(name, tuple(pattern)))

        else:
            parser.pos = 0
            parser.fail(f"unknown directive {directive!r}", directive)

    return CircuitDoc(
        tuple(modes), tuple(sources), tuple(elements),
        tuple(postselects), tuple(detects),
    )


def render(doc):
    """Canonical pretty-print; ``parse(render(doc))`` equals ``doc``."""
    lines = []
    for decl in doc.modes:
        lines.append(f"mode {decl.name} {decl.box} {decl.time_slot} {decl.role}")
    for source in doc.sources:
        pairs = " ".join(
            f"{name} {render_weight(w)}" for name, w in source.weights
        )
        lines.append(f"source {pairs}")
    for element in doc.elements:
        params = " ".join(
            p if isinstance(p, str) else repr(p) for p in element.params
        )
        mode_args = " ".join(element.modes)
        middle = f"{params} " if params else ""
        lines.append(f"{element.op} {middle}{mode_args}")
    for ps in doc.postselects:
        if isinstance(ps, PostselectPattern):
            pairs = " ".join(f"{n}={c}" for n, c in ps.pattern)
            lines.append(f"postselect {pairs}")
        else:
            pairs = " ".join(
                f"{name} {render_weight(w)}" for name, w in ps.weights
            )
            lines.append(f"postselect_state {pairs}")
    for det in doc.detects:
        pairs = " ".join(f"{n}={c}" for n, c in det.pattern)
        lines.append(f"detect {det.name} {pairs}")
    return "\n".join(lines) + "\n"


@dataclass
class CompiledCircuit:
    initial: FockState
    schedule: list
    postselects: list  # ("pattern", {label: count}) | ("state", FockState)
    detects: list  # (name, {label: count})
    labels: dict  # name -> ModeLabel


def compile_doc(doc, n_total_max=2):
    """Lower a parsed document to an initial state plus element schedule."""
    labels = {}
    for decl in doc.modes:
        labels[decl.name] = ModeLabel(
            decl.name,
            _BOX_TAGS[decl.box],
            _TIME_TAGS[decl.time_slot],
            _ROLE_TAGS[decl.role],
        )
    if not labels:
        raise CompileError(0, "circuit declares no modes")
    if len(doc.sources) > n_total_max:
        raise CompileError(
            len(doc.modes) + len(doc.sources),
            f"{len(doc.sources)} source photons exceed the photon budget "
            f"{n_total_max}",
        )

    used = set()
    for source in doc.sources:
        used.update(name for name, _ in source.weights)
    for element in doc.elements:
        used.update(element.modes)
    for ps in doc.postselects:
        pairs = ps.pattern if isinstance(ps, PostselectPattern) else ps.weights
        used.update(name for name, _ in pairs)
    for det in doc.detects:
        used.update(name for name, _ in det.pattern)
    dangling = sorted(set(labels) - used)
    if dangling:
        raise CompileError(0, f"modes declared but never used: {dangling}")

    state = register_modes(
        [labels[d.name] for d in doc.modes], n_total_max
    )
    for source in doc.sources:
        state = superposition_source(
            state, {labels[n]: w for n, w in source.weights}
        )

    schedule = []
    for index, element in enumerate(doc.elements):
        bound = [labels[n] for n in element.modes]
        try:
            if element.op == "bs":
                schedule.append(beamsplitter(element.params[0], *bound))
            elif element.op == "ps":
                schedule.append(phase_shifter(element.params[0], *bound))
            elif element.op == "ns":
                schedule.append(ns_single(*bound))
            elif element.op == "ns2":
                schedule.append(ns_two_mode(*bound))
            elif element.op == "pqr":
                schedule.append(
                    pqr_ideal(
                        *bound,
                        orientation=RouterOrientation(element.params[0]),
                    )
                )
            elif element.op == "relabel":
                a, b = bound
                schedule.append(relabel({a: b, b: a}))
            elif element.op == "tunnel":
                schedule.append(tunneling(element.params[0], *bound))
            else:
                raise CompileError(index, f"unknown element {element.op!r}")
        except CompileError:
            raise
        except Exception as exc:
            raise CompileError(index, str(exc)) from exc

    postselects = []
    for ps in doc.postselects:
        if isinstance(ps, PostselectPattern):
            postselects.append(
                ("pattern", {labels[n]: c for n, c in ps.pattern})
            )
        else:
            sub_modes = [labels[n] for n, _ in ps.weights]
            sub = register_modes(sub_modes, n_total_max)
            sub = superposition_source(
                sub, {labels[n]: w for n, w in ps.weights}
            )
            postselects.append(("state", sub))
    detects = [
        (det.name, {labels[n]: c for n, c in det.pattern})
        for det in doc.detects
    ]
    return CompiledCircuit(state, schedule, postselects, detects, labels)


def execute(compiled):
    """Run a compiled circuit and report detection probabilities.

    Detect-pattern probabilities are reported unconditionally and
    conditioned on each post-selection statement separately.
    """
    final = apply_schedule(compiled.initial, compiled.schedule)
    postselections = []
    conditioned_states = []
    for kind, payload in compiled.postselects:
        if kind == "pattern":
            outcome = project_pattern(final, payload)
            conditioned = outcome.state
        else:
            outcome = postselect_subsystem(final, payload)
            conditioned = outcome.state
        postselections.append(
            {"kind": kind, "probability": outcome.probability}
        )
        conditioned_states.append((kind, conditioned))

    detections = []
    for name, pattern in compiled.detects:
        entry = {
            "name": name,
            "probability": project_pattern(final, pattern).probability,
            "conditional": [],
        }
        for (kind, conditioned), info in zip(
            conditioned_states, postselections
        ):
            if kind == "state":
                # Detection patterns refer to probe modes, which survive
                # the subsystem post-selection.
                probe_pattern = {
                    m: c for m, c in pattern.items()
                    if m in set(conditioned.modes)
                }
            else:
                probe_pattern = pattern
            if conditioned.is_zero:
                entry["conditional"].append(0.0)
            else:
                entry["conditional"].append(
                    project_pattern(conditioned, probe_pattern).probability
                )
        detections.append(entry)
    return {
        "postselections": postselections,
        "detections": detections,
        "final_norm": final.norm(),
    }


def simulate_text(text, n_total_max=2):
    """Parse, compile and execute a circuit document in one call."""
    return execute(compile_doc(parse(text), n_total_max))
