"""Scenario files, single runs, discipline comparison and one-at-a-time sweeps.

Scenario files are flat sectioned ``key = value`` text::

    [topology]          steps, hosts_per_step, backbone_rate, access_rate,
                        backbone_prop_delay, access_prop_delay, ber
    [qdisc]             kind, buffer_capacity, pq_levels, drop_log, weight.<tos>
    [voip.N]            src, dst | src_step, dst_step, clients, stagger,
                        frame_interval, payload_bytes, header_bytes, start, stop, tos
    [ftp.N]             src, dst, mean_interrequest, file_size_bytes,
                        segment_payload, header_bytes, start, stop, tos
    [run]               duration, seed, bucket_width
    [sweep.N]           key, values

Rates are bits/s, times are seconds, ``#`` starts a comment.
"""

from __future__ import annotations

import dataclasses
import json
import os
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Optional

from .kernel import Simulator, seconds
from .metrics import MetricsStore, export, series_csv
from .network import Network
from .qdisc import DEFAULT_BUFFER, VOICE_TOS, QdiscConfig, QdiscKind
from .topology import StepSpec, Topology, build_step_topology, compute_routes, host_name
from .traffic import FtpSourceSpec, VoipSourceSpec


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


@dataclass
class VoipGroup:
    src: Optional[str] = None
    dst: Optional[str] = None
    src_step: Optional[int] = None
    dst_step: Optional[int] = None
    clients: int = 1
    stagger: float = 0.0
    frame_interval: float = 0.02
    payload_bytes: int = 160
    header_bytes: int = 40
    start: float = 0.0
    stop: Optional[float] = None
    tos: int = VOICE_TOS


@dataclass
class FtpGroup:
    src: Optional[str] = None
    dst: Optional[str] = None
    mean_interrequest: float = 1.0
    file_size_bytes: int = 1_000_000
    segment_payload: int = 1460
    header_bytes: int = 40
    start: float = 0.0
    stop: Optional[float] = None
    tos: int = 0


@dataclass
class Sweep:
    key: str
    values: list[str]


@dataclass
class Scenario:
    step_spec: StepSpec = field(default_factory=StepSpec)
    qdisc: QdiscConfig = field(default_factory=QdiscConfig)
    voip: list[VoipGroup] = field(default_factory=list)
    ftp: list[FtpGroup] = field(default_factory=list)
    duration: float = 60.0
    seed: int = 1
    bucket_width: float = 1.0
    drop_log: bool = False
    sweeps: list[Sweep] = field(default_factory=list)

    def voip_sources(self) -> list[VoipSourceSpec]:
        out = []
        h = self.step_spec.hosts_per_step
        for g in self.voip:
            for c in range(g.clients):
                if g.src is not None:
                    src, dst = g.src, g.dst
                else:
                    i, j = c % h, (c % h + c // h) % h
                    src, dst = host_name(g.src_step, i), host_name(g.dst_step, j)
                stop = self.duration if g.stop is None else g.stop
                out.append(VoipSourceSpec(src, dst, g.frame_interval, g.payload_bytes,
                                          g.header_bytes, g.start + c * g.stagger, stop, g.tos))
        return out

    def ftp_sources(self) -> list[FtpSourceSpec]:
        return [FtpSourceSpec(g.src, g.dst, g.mean_interrequest, g.file_size_bytes,
                              g.segment_payload, g.header_bytes, g.start,
                              self.duration if g.stop is None else g.stop, g.tos)
                for g in self.ftp]

    def with_qdisc(self, kind: QdiscKind) -> "Scenario":
        return dataclasses.replace(self, qdisc=dataclasses.replace(self.qdisc, kind=kind))


# parsing -----------------------------------------------------------------


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"not an integer: {text!r}")
    return int(value)


def _opt_float(text: str) -> Optional[float]:
    return None if text.lower() in ("", "none", "duration") else float(text)


def _opt_int(text: str) -> Optional[int]:
    return None if text.lower() in ("", "none") else _int(text)


def _opt_str(text: str) -> Optional[str]:
    return None if text.lower() in ("", "none") else text


_TOPOLOGY = {
    "steps": _int, "hosts_per_step": _int, "backbone_rate": _int, "access_rate": _int,
    "backbone_prop_delay": float, "access_prop_delay": float, "ber": float,
}
_QDISC = {"kind": str, "buffer_capacity": _int, "pq_levels": _int, "drop_log": _bool}
_VOIP = {
    "src": _opt_str, "dst": _opt_str, "src_step": _opt_int, "dst_step": _opt_int,
    "clients": _int, "stagger": float, "frame_interval": float, "payload_bytes": _int,
    "header_bytes": _int, "start": float, "stop": _opt_float, "tos": _int,
}
_FTP = {
    "src": _opt_str, "dst": _opt_str, "mean_interrequest": float, "file_size_bytes": _int,
    "segment_payload": _int, "header_bytes": _int, "start": float, "stop": _opt_float,
    "tos": _int,
}
_RUN = {"duration": float, "seed": _int, "bucket_width": float}
_SWEEP = {"key": str, "values": lambda t: [v.strip() for v in t.split(",") if v.strip()]}

_SECTION_RE = re.compile(r"^\[([a-z]+)(?:\.(\d+))?\]$")


def _schema(section: str) -> dict[str, Callable[[str], Any]]:
    base = section.split(".")[0]
    return {"topology": _TOPOLOGY, "qdisc": _QDISC, "voip": _VOIP, "ftp": _FTP,
            "run": _RUN, "sweep": _SWEEP}[base]


def _known_key(section: str, key: str) -> bool:
    if section == "qdisc" and re.fullmatch(r"weight\.\d+", key):
        return True
    return key in _schema(section)


RawScenario = dict[str, dict[str, tuple[str, int]]]


def read_raw(text: str) -> RawScenario:
    raw: RawScenario = {}
    section: Optional[str] = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            base, idx = m.groups()
            if base not in ("topology", "qdisc", "run", "voip", "ftp", "sweep"):
                raise ParseError(f"line {lineno}: unknown section [{line[1:-1]}]")
            if (idx is None) != (base in ("topology", "qdisc", "run")):
                raise ParseError(f"line {lineno}: malformed section header {line}")
            section = line[1:-1]
            if section in raw:
                raise ParseError(f"line {lineno}: duplicate section [{section}]")
            raw[section] = {}
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        if section is None:
            raise ParseError(f"line {lineno}: key outside of any section")
        key, value = (p.strip() for p in line.split("=", 1))
        if not _known_key(section, key):
            raise ParseError(f"line {lineno}: unknown key {key!r} in [{section}]")
        if key in raw[section]:
            raise ParseError(f"line {lineno}: duplicate key {key!r} in [{section}]")
        raw[section][key] = (value, lineno)
    return raw


def apply_overrides(raw: RawScenario, overrides: dict[str, str]) -> RawScenario:
    """Set ``section.key`` (e.g. ``voip.0.clients``) entries; sections are created on demand."""
    out = {s: dict(kv) for s, kv in raw.items()}
    for dotted, value in overrides.items():
        section, key = _split_key(dotted)
        if section not in out:
            out[section] = {}
        out[section][key] = (str(value), 0)
    return out


def _split_key(dotted: str) -> tuple[str, str]:
    parts = dotted.split(".")
    if parts[0] in ("voip", "ftp", "sweep") and len(parts) >= 3:
        section, key = ".".join(parts[:2]), ".".join(parts[2:])
    else:
        section, key = parts[0], ".".join(parts[1:])
    if not key or not _SECTION_RE.match(f"[{section}]") or section.split(".")[0] not in (
            "topology", "qdisc", "run", "voip", "ftp", "sweep"):
        raise ParseError(f"bad scenario key {dotted!r}")
    if not _known_key(section, key):
        raise ParseError(f"unknown key {key!r} in [{section}]")
    return section, key


def _convert(section: str, key: str, value: str, lineno: int):
    conv = float if key.startswith("weight.") else _schema(section)[key]
    try:
        return conv(value)
    except ValueError as exc:
        where = f"line {lineno}: " if lineno else ""
        raise ParseError(f"{where}bad value for {key!r} in [{section}]: {exc}") from None


def _values(raw: RawScenario, section: str) -> dict[str, Any]:
    return {k: _convert(section, k, v, n) for k, (v, n) in raw.get(section, {}).items()}


def _indexed(raw: RawScenario, base: str) -> list[str]:
    names = [s for s in raw if s.split(".")[0] == base]
    return sorted(names, key=lambda s: int(s.split(".")[1]))


def build_scenario(raw: RawScenario) -> Scenario:
    topo = _values(raw, "topology")
    try:
        step_spec = StepSpec(**topo)
    except TypeError as exc:  # pragma: no cover - keys are checked in read_raw
        raise ParseError(str(exc)) from None

    q = _values(raw, "qdisc")
    try:
        kind = QdiscKind(q.pop("kind", "fifo").lower())
    except ValueError:
        raise ValidationError("qdisc kind must be one of fifo, pq, wfq") from None
    weights = {int(k.split(".")[1]): v for k, v in q.items() if k.startswith("weight.")}
    qdisc = QdiscConfig(kind, q.get("buffer_capacity", DEFAULT_BUFFER), weights,
                        q.get("pq_levels", 8))
    run = _values(raw, "run")
    scenario = Scenario(
        step_spec=step_spec,
        qdisc=qdisc,
        voip=[VoipGroup(**_values(raw, s)) for s in _indexed(raw, "voip")],
        ftp=[FtpGroup(**_values(raw, s)) for s in _indexed(raw, "ftp")],
        duration=run.get("duration", 60.0),
        seed=run.get("seed", 1),
        bucket_width=run.get("bucket_width", 1.0),
        drop_log=q.get("drop_log", False),
        sweeps=[Sweep(**_values(raw, s)) for s in _indexed(raw, "sweep")],
    )
    validate(scenario)
    return scenario


def parse_scenario(text: str, overrides: Optional[dict[str, str]] = None) -> Scenario:
    raw = read_raw(text)
    if overrides:
        raw = apply_overrides(raw, overrides)
    return build_scenario(raw)


def load_scenario(path_or_name: str, overrides: Optional[dict[str, str]] = None) -> Scenario:
    """Load a scenario file, or a bundled scenario by name (``overload``, ...)."""
    if os.path.exists(path_or_name):
        with open(path_or_name) as fh:
            text = fh.read()
    else:
        text = bundled_scenario_text(path_or_name)
    return parse_scenario(text, overrides)


def bundled_scenarios() -> list[str]:
    files = resources.files("stepnet") / "scenarios"
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".scn"))


def bundled_scenario_text(name: str) -> str:
    path = resources.files("stepnet") / "scenarios" / f"{name}.scn"
    if not path.is_file():
        raise FileNotFoundError(f"no scenario file or bundled scenario named {name!r}")
    return path.read_text()


def validate(s: Scenario) -> None:
    def check(cond: bool, msg: str) -> None:
        if not cond:
            raise ValidationError(msg)

    try:
        s.step_spec.validate()
        s.qdisc.validate()
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    check(s.duration > 0, "run.duration must be positive")
    check(s.bucket_width > 0, "run.bucket_width must be positive")
    check(s.seed >= 0, "run.seed must be nonnegative")
    check(bool(s.voip or s.ftp), "scenario needs at least one traffic source")
    steps = s.step_spec.steps
    for n, g in enumerate(s.voip):
        check(g.clients >= 1, f"voip.{n}.clients must be >= 1")
        if g.src is None or g.dst is None:
            check(g.src is None and g.dst is None and g.src_step is not None
                  and g.dst_step is not None,
                  f"voip.{n} needs either src and dst or src_step and dst_step")
            check(0 <= g.src_step < steps and 0 <= g.dst_step < steps,
                  f"voip.{n} step out of range")
    for n, g in enumerate(s.ftp):
        check(g.src is not None and g.dst is not None, f"ftp.{n} needs src and dst")
    hosts = set(build_step_topology(s.step_spec).hosts)
    try:
        for spec in s.voip_sources() + s.ftp_sources():
            check(spec.src in hosts, f"unknown host {spec.src!r}")
            check(spec.dst in hosts, f"unknown host {spec.dst!r}")
            spec.validate()
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(str(exc)) from None
    for sw in s.sweeps:
        _split_key(sw.key)
        check(bool(sw.values), f"sweep over {sw.key} has no values")


def _fmt_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ", ".join(v)
    return str(v)


def format_scenario(s: Scenario) -> str:
    """Canonical text of a scenario; parses back to an equal scenario."""
    lines = ["[topology]"]
    for f in dataclasses.fields(StepSpec):
        lines.append(f"{f.name} = {_fmt_value(getattr(s.step_spec, f.name))}")
    lines += ["", "[qdisc]", f"kind = {s.qdisc.kind.value}",
              f"buffer_capacity = {s.qdisc.buffer_capacity_packets}",
              f"pq_levels = {s.qdisc.pq_levels}", f"drop_log = {_fmt_value(s.drop_log)}"]
    for tos in sorted(s.qdisc.wfq_weights):
        lines.append(f"weight.{tos} = {_fmt_value(float(s.qdisc.wfq_weights[tos]))}")
    for base, groups in (("voip", s.voip), ("ftp", s.ftp), ("sweep", s.sweeps)):
        for n, g in enumerate(groups):
            lines += ["", f"[{base}.{n}]"]
            for f in dataclasses.fields(g):
                lines.append(f"{f.name} = {_fmt_value(getattr(g, f.name))}")
    lines += ["", "[run]", f"duration = {s.duration!r}", f"seed = {s.seed}",
              f"bucket_width = {s.bucket_width!r}"]
    return "\n".join(lines) + "\n"


# running -----------------------------------------------------------------


@dataclass
class RunResult:
    scenario: Scenario
    summary: dict
    series_csv: str
    events_processed: int
    network: Network
    metrics: MetricsStore
    topology: Topology
    trace: Optional[list] = None
    drop_log: Optional[list] = None

    def voice(self) -> dict:
        return self.summary["per_tos"].get(str(VOICE_TOS), {})


def run_scenario(scenario: Scenario, out_dir: Optional[str] = None,
                 trace: bool = False) -> RunResult:
    validate(scenario)
    sim = Simulator(seed=scenario.seed, trace=trace)
    topology = build_step_topology(scenario.step_spec)
    routes = compute_routes(topology)
    width = seconds(scenario.bucket_width)
    metrics = MetricsStore(width, sim.rng_stream("delay-reservoir"))
    drop_log: Optional[list] = [] if scenario.drop_log else None
    net = Network(sim, topology, routes, scenario.qdisc, metrics, drop_log)
    for spec in scenario.voip_sources():
        net.add_voip(spec)
    for spec in scenario.ftp_sources():
        net.add_ftp(spec)
    duration = seconds(scenario.duration)
    stats = sim.run_until(duration)
    in_flight = net.in_flight()
    extra = {"qdisc": scenario.qdisc.kind.value, "seed": scenario.seed,
             "duration_s": scenario.duration, "events_processed": stats.events_processed}
    if out_dir is not None:
        summary = export(metrics, out_dir, duration, in_flight, extra)
        with open(os.path.join(out_dir, "effective-scenario"), "w") as fh:
            fh.write(format_scenario(scenario))
        if drop_log is not None:
            with open(os.path.join(out_dir, "drops.csv"), "w") as fh:
                fh.write("time_ns,port_id,tos,flow_id,reason\n")
                fh.writelines(",".join(map(str, row)) + "\n" for row in drop_log)
    else:
        summary = {**extra, **metrics.summary(duration, in_flight)}
    return RunResult(scenario, summary, series_csv(metrics, duration), stats.events_processed,
                     net, metrics, topology, sim.trace, drop_log)


# comparison --------------------------------------------------------------

DISCIPLINES = (QdiscKind.FIFO, QdiscKind.PQ, QdiscKind.WFQ)


@dataclass
class Verdict:
    name: str
    passed: bool
    strict: bool
    values: dict[str, Any]


@dataclass
class ComparisonReport:
    summaries: dict[str, dict]
    verdicts: list[Verdict]
    voice_sent_series: dict[str, list[int]]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, name: str) -> Verdict:
        return next(v for v in self.verdicts if v.name == name)

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "verdicts": [dataclasses.asdict(v) for v in self.verdicts],
                "summaries": self.summaries}


def _chain(values: list, name: str, labels: list[str], descending: bool = True) -> Verdict:
    pairs = list(zip(values, values[1:]))
    ok = all(a >= b for a, b in pairs)
    strict = all(a > b for a, b in pairs)
    return Verdict(name, ok, ok and strict, dict(zip(labels, values)))


def _voice_sent_series(result: RunResult) -> list[int]:
    table = result.metrics.bucket_series(seconds(result.scenario.duration))
    return table.get(("sent_packets", VOICE_TOS), [])


def compare_disciplines(scenario: Scenario, out_dir: Optional[str] = None) -> ComparisonReport:
    results: dict[str, RunResult] = {}
    for kind in DISCIPLINES:
        sub = None if out_dir is None else os.path.join(out_dir, kind.value)
        results[kind.value] = run_scenario(scenario.with_qdisc(kind), sub)
    report = evaluate(results)
    if out_dir is not None:
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report


def evaluate(results: dict[str, RunResult]) -> ComparisonReport:
    voice = {k: r.voice() for k, r in results.items()}

    def get(kind: str, key: str, default=0):
        v = voice[kind].get(key)
        return default if v is None else v

    drops = [get(k, "dropped_buffer_full") for k in ("fifo", "wfq", "pq")]
    received = [get(k, "received_packets") for k in ("pq", "wfq", "fifo")]
    delay = {k: get(k, "delay_mean_s", 0.0) for k in ("fifo", "wfq", "pq")}
    sent = {k: _voice_sent_series(r) for k, r in results.items()}

    verdicts = [
        _chain(drops, "drops_ordering", ["fifo", "wfq", "pq"]),
        _chain(received, "received_ordering", ["pq", "wfq", "fifo"]),
    ]
    d_ok = delay["fifo"] >= delay["wfq"] and delay["fifo"] >= delay["pq"]
    d_strict = delay["fifo"] > delay["wfq"] and delay["fifo"] > delay["pq"]
    verdicts.append(Verdict("delay_ordering", d_ok, d_ok and d_strict, delay))
    same = sent["fifo"] == sent["pq"] == sent["wfq"]
    verdicts.append(Verdict("sent_equality", same, same,
                            {k: sum(v) for k, v in sent.items()}))
    return ComparisonReport({k: r.summary for k, r in results.items()}, verdicts, sent)


# sweeps ------------------------------------------------------------------


def sweep_points(scenario: Scenario) -> list[tuple[str, str, Scenario]]:
    """Every (key, value, scenario) point of the scenario's one-at-a-time sweeps."""
    text = format_scenario(dataclasses.replace(scenario, sweeps=[]))
    points = []
    for sw in scenario.sweeps:
        for value in sw.values:
            points.append((sw.key, value, parse_scenario(text, {sw.key: value})))
    return points


def run_sweep(scenario: Scenario, out_dir: Optional[str] = None) -> list[dict]:
    rows = []
    for key, value, point in sweep_points(scenario):
        sub = None if out_dir is None else os.path.join(out_dir, f"{key}={value}")
        result = run_scenario(point, sub)
        rows.append({"key": key, "value": value, "summary": result.summary})
    return rows
