"""Scenario DSL: a line-oriented grammar for describing simulation runs.

One directive per line, ``#`` starts a comment, tokens are whitespace
separated:

    mode p2p|cs
    seed <u64>
    param <name> <value>
    node <id> peer|server|client <lat_deg> <lon_deg> <alt_m> [deploy=<t_s>]
    at <t_s> join <id>
    at <t_s> move <id> <lat> <lon> <alt>
    at <t_s> qkd <idA> <idB> pulses=<n>
    at <t_s> send <src> <dst> hex:<hexstring>
    at <t_s> eve <idA> <idB> intercept_resend on|off

Parsing is total: any input yields either a Scenario or a ScenarioError
with a line/column diagnostic.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .bitops import bits_from_hex

_ID_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")
_TOKEN_RE = re.compile(r"\S+")

MAX_SEED = 2**64 - 1

# DSL parameter name -> (config group, value type). Groups are mapped onto
# the dataclass fields of the same names by the runner.
PARAM_SPECS: dict[str, tuple[str, type]] = {
    "max_range_km": ("feasibility", float),
    "require_los": ("feasibility", bool),
    "atm_loss_db_per_km": ("channel", float),
    "fixed_system_loss_db": ("channel", float),
    "dark_count_prob": ("channel", float),
    "background_prob": ("channel", float),
    "detector_efficiency": ("channel", float),
    "intrinsic_error_prob": ("channel", float),
    "min_sift_len": ("protocol", int),
    "sample_fraction": ("protocol", float),
    "qber_abort": ("protocol", float),
    "f_ec": ("protocol", float),
    "safety_margin_bits": ("protocol", int),
    "signal_mean_photons": ("protocol", float),
    "trojan_tolerance": ("protocol", float),
    "strong_pulse_intensity": ("protocol", float),
    "pulses_per_session": ("network", int),
    "max_session_attempts": ("network", int),
    "precharge_bits": ("network", int),
    "acquire_coarse_s": ("network", float),
    "acquire_fine_s": ("network", float),
}

ROLES = ("peer", "server", "client")
EVENT_KINDS = ("join", "move", "qkd", "send", "eve")


class ScenarioError(Exception):
    """Diagnostic for a malformed scenario: 1-based line and column."""

    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col
        self.message = message


@dataclass(frozen=True)
class NodeDecl:
    node_id: str
    role: str
    lat: float
    lon: float
    alt: float
    deploy: float | None = None


@dataclass(frozen=True)
class EventDecl:
    at: float
    kind: str  # join | move | qkd | send | eve
    args: tuple


@dataclass
class Scenario:
    mode: str = "p2p"
    seed: int = 0
    params: dict[str, float | int | bool] = field(default_factory=dict)
    nodes: list[NodeDecl] = field(default_factory=list)
    events: list[EventDecl] = field(default_factory=list)

    def node_ids(self) -> list[str]:
        return [n.node_id for n in self.nodes]


class _Line:
    """One directive line plus enough position info for diagnostics."""

    def __init__(self, number: int, text: str):
        self.number = number
        self.tokens: list[str] = []
        self.cols: list[int] = []
        code = text.split("#", 1)[0]
        for m in _TOKEN_RE.finditer(code):
            self.tokens.append(m.group())
            self.cols.append(m.start() + 1)

    def error(self, index: int, message: str) -> ScenarioError:
        col = self.cols[index] if index < len(self.cols) else (self.cols[-1] if self.cols else 1)
        return ScenarioError(self.number, col, message)

    def token(self, index: int, what: str) -> str:
        if index >= len(self.tokens):
            raise self.error(len(self.tokens), f"missing {what}")
        return self.tokens[index]

    def end(self, index: int) -> None:
        if len(self.tokens) > index:
            raise self.error(index, f"unexpected token {self.tokens[index]!r}")

    def float_at(self, index: int, what: str) -> float:
        tok = self.token(index, what)
        try:
            v = float(tok)
        except ValueError:
            raise self.error(index, f"{what} must be a number, got {tok!r}") from None
        if v != v or v in (float("inf"), float("-inf")):
            raise self.error(index, f"{what} must be finite")
        return v

    def int_at(self, index: int, what: str) -> int:
        tok = self.token(index, what)
        try:
            return int(tok, 10)
        except ValueError:
            raise self.error(index, f"{what} must be an integer, got {tok!r}") from None

    def id_at(self, index: int, what: str) -> str:
        tok = self.token(index, what)
        if not _ID_RE.match(tok):
            raise self.error(index, f"{what} must match [A-Za-z0-9_.-]+, got {tok!r}")
        return tok

    def time_at(self, index: int, what: str = "time") -> float:
        v = self.float_at(index, what)
        if v < 0:
            raise self.error(index, f"{what} must be >= 0")
        return v


def _parse_param_value(line: _Line, index: int, name: str, typ: type):
    tok = line.token(index, "param value")
    if typ is bool:
        if tok == "true":
            return True
        if tok == "false":
            return False
        raise line.error(index, f"param {name} expects true or false, got {tok!r}")
    if typ is int:
        return line.int_at(index, f"param {name}")
    return line.float_at(index, f"param {name}")


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; raises ScenarioError on any defect."""
    sc = Scenario()
    mode_seen = False
    seed_seen = False
    node_lines: dict[str, int] = {}
    event_lines: list[int] = []

    for number, raw in enumerate(text.splitlines(), start=1):
        line = _Line(number, raw)
        if not line.tokens:
            continue
        head = line.tokens[0]
        if head == "mode":
            if mode_seen:
                raise line.error(0, "duplicate mode directive")
            mode = line.token(1, "mode value")
            if mode not in ("p2p", "cs"):
                raise line.error(1, f"mode must be p2p or cs, got {mode!r}")
            line.end(2)
            sc.mode = mode
            mode_seen = True
        elif head == "seed":
            if seed_seen:
                raise line.error(0, "duplicate seed directive")
            seed = line.int_at(1, "seed")
            if not (0 <= seed <= MAX_SEED):
                raise line.error(1, "seed must fit in 64 unsigned bits")
            line.end(2)
            sc.seed = seed
            seed_seen = True
        elif head == "param":
            name = line.token(1, "param name")
            spec = PARAM_SPECS.get(name)
            if spec is None:
                raise line.error(1, f"unknown param {name!r}")
            if name in sc.params:
                raise line.error(1, f"duplicate param {name!r}")
            sc.params[name] = _parse_param_value(line, 2, name, spec[1])
            line.end(3)
        elif head == "node":
            nid = line.id_at(1, "node id")
            if nid in node_lines:
                raise line.error(1, f"duplicate node id {nid!r}")
            role = line.token(2, "node role")
            if role not in ROLES:
                raise line.error(2, f"role must be peer, server, or client, got {role!r}")
            lat = line.float_at(3, "latitude")
            lon = line.float_at(4, "longitude")
            alt = line.float_at(5, "altitude")
            deploy = None
            if len(line.tokens) > 6:
                tok = line.token(6, "deploy")
                if not tok.startswith("deploy="):
                    raise line.error(6, f"expected deploy=<t_s>, got {tok!r}")
                try:
                    deploy = float(tok[len("deploy="):])
                except ValueError:
                    raise line.error(6, f"bad deploy time in {tok!r}") from None
                if deploy < 0:
                    raise line.error(6, "deploy time must be >= 0")
                line.end(7)
            node_lines[nid] = number
            sc.nodes.append(NodeDecl(nid, role, lat, lon, alt, deploy))
        elif head == "at":
            at = line.time_at(1)
            kind = line.token(2, "event kind")
            if kind == "join":
                nid = line.id_at(3, "node id")
                line.end(4)
                ev = EventDecl(at, "join", (nid,))
            elif kind == "move":
                nid = line.id_at(3, "node id")
                lat = line.float_at(4, "latitude")
                lon = line.float_at(5, "longitude")
                alt = line.float_at(6, "altitude")
                line.end(7)
                ev = EventDecl(at, "move", (nid, lat, lon, alt))
            elif kind == "qkd":
                a = line.id_at(3, "node id")
                b = line.id_at(4, "node id")
                tok = line.token(5, "pulses=<n>")
                if not tok.startswith("pulses="):
                    raise line.error(5, f"expected pulses=<n>, got {tok!r}")
                try:
                    pulses = int(tok[len("pulses="):], 10)
                except ValueError:
                    raise line.error(5, f"bad pulse count in {tok!r}") from None
                if pulses < 1:
                    raise line.error(5, "pulses must be >= 1")
                line.end(6)
                ev = EventDecl(at, "qkd", (a, b, pulses))
            elif kind == "send":
                src = line.id_at(3, "source id")
                dst = line.id_at(4, "destination id")
                tok = line.token(5, "hex:<payload>")
                if not tok.startswith("hex:"):
                    raise line.error(5, f"expected hex:<hexstring>, got {tok!r}")
                payload = tok[len("hex:"):]
                try:
                    bits_from_hex(payload)
                except ValueError as exc:
                    raise line.error(5, str(exc)) from None
                line.end(6)
                ev = EventDecl(at, "send", (src, dst, payload))
            elif kind == "eve":
                a = line.id_at(3, "node id")
                b = line.id_at(4, "node id")
                attack = line.token(5, "attack kind")
                if attack != "intercept_resend":
                    raise line.error(5, f"only intercept_resend can be toggled, got {attack!r}")
                state = line.token(6, "on|off")
                if state not in ("on", "off"):
                    raise line.error(6, f"expected on or off, got {state!r}")
                line.end(7)
                ev = EventDecl(at, "eve", (a, b, state == "on"))
            else:
                raise line.error(2, f"unknown event kind {kind!r}")
            sc.events.append(ev)
            event_lines.append(number)
        else:
            raise line.error(0, f"unknown directive {head!r}")

    _validate(sc, node_lines, event_lines)
    return sc


def _validate(sc: Scenario, node_lines: dict[str, int], event_lines: list[int]) -> None:
    if not sc.nodes and sc.events:
        raise ScenarioError(event_lines[0], 1, "events declared but no nodes")
    roles = {n.node_id: n.role for n in sc.nodes}
    for n in sc.nodes:
        if sc.mode == "p2p" and n.role != "peer":
            raise ScenarioError(node_lines[n.node_id], 1,
                                f"node {n.node_id!r} has role {n.role!r} in a p2p scenario")
        if sc.mode == "cs" and n.role == "peer":
            raise ScenarioError(node_lines[n.node_id], 1,
                                f"node {n.node_id!r} has role peer in a cs scenario")

    join_times: dict[str, float] = {}
    for ev, ln in zip(sc.events, event_lines):
        for nid in _event_node_refs(ev):
            if nid not in roles:
                raise ScenarioError(ln, 1, f"unknown node {nid!r}")
        if ev.kind in ("qkd", "send", "eve") and ev.args[0] == ev.args[1]:
            raise ScenarioError(ln, 1, "the two nodes must differ")
        if ev.kind == "join":
            nid = ev.args[0]
            if nid in join_times:
                raise ScenarioError(ln, 1, f"node {nid!r} joins twice")
            decl = next(n for n in sc.nodes if n.node_id == nid)
            if decl.deploy is not None:
                raise ScenarioError(ln, 1,
                                    f"node {nid!r} has an explicit deploy time and a join event")
            join_times[nid] = ev.at

    deploys = resolve_deploy_times(sc)
    for ev, ln in zip(sc.events, event_lines):
        if ev.kind == "join":
            continue
        for nid in _event_node_refs(ev):
            if ev.at < deploys[nid]:
                raise ScenarioError(ln, 1,
                                    f"event at t={ev.at:g} references {nid!r} "
                                    f"before its deploy time t={deploys[nid]:g}")


def _event_node_refs(ev: EventDecl):
    if ev.kind in ("join", "move"):
        return (ev.args[0],)
    return (ev.args[0], ev.args[1])


def resolve_deploy_times(sc: Scenario) -> dict[str, float]:
    """Deployment time per node: explicit deploy=, else its join event,
    else 0."""
    joins = {ev.args[0]: ev.at for ev in sc.events if ev.kind == "join"}
    out: dict[str, float] = {}
    for n in sc.nodes:
        if n.deploy is not None:
            out[n.node_id] = n.deploy
        elif n.node_id in joins:
            out[n.node_id] = joins[n.node_id]
        else:
            out[n.node_id] = 0.0
    return out


def _num(v: float) -> str:
    return repr(float(v))


def format_scenario(sc: Scenario) -> str:
    """Canonical text form; parse(format(sc)) reconstructs an equal Scenario."""
    lines = [f"mode {sc.mode}", f"seed {sc.seed}"]
    for name in sorted(sc.params):
        v = sc.params[name]
        if isinstance(v, bool):
            text = "true" if v else "false"
        elif isinstance(v, int):
            text = str(v)
        else:
            text = _num(v)
        lines.append(f"param {name} {text}")
    for n in sc.nodes:
        base = f"node {n.node_id} {n.role} {_num(n.lat)} {_num(n.lon)} {_num(n.alt)}"
        if n.deploy is not None:
            base += f" deploy={_num(n.deploy)}"
        lines.append(base)
    for ev in sc.events:
        if ev.kind == "join":
            lines.append(f"at {_num(ev.at)} join {ev.args[0]}")
        elif ev.kind == "move":
            nid, lat, lon, alt = ev.args
            lines.append(f"at {_num(ev.at)} move {nid} {_num(lat)} {_num(lon)} {_num(alt)}")
        elif ev.kind == "qkd":
            a, b, pulses = ev.args
            lines.append(f"at {_num(ev.at)} qkd {a} {b} pulses={pulses}")
        elif ev.kind == "send":
            src, dst, payload = ev.args
            lines.append(f"at {_num(ev.at)} send {src} {dst} hex:{payload}")
        elif ev.kind == "eve":
            a, b, on = ev.args
            lines.append(f"at {_num(ev.at)} eve {a} {b} intercept_resend {'on' if on else 'off'}")
    return "\n".join(lines) + "\n"
