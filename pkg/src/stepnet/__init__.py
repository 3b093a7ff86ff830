"""Packet-level discrete-event simulation of a step network under FIFO, PQ and WFQ."""

from .kernel import (Event, EventHandle, EventKind, RandomStream, RunStats,
                     SchedulingInPast, Simulator, seconds, to_seconds)
from .metrics import (JitterState, MetricsStore, NegativeDelay, bucketize, e2e_delay,
                      export, update_jitter)
from .network import Network
from .qdisc import (EnqueueOutcome, FifoQdisc, InvalidTos, PriorityQdisc, QdiscConfig,
                    QdiscKind, WfqFlow, WfqQdisc, classify, make_qdisc, wfq_finish_time)
from .scenario import (ComparisonReport, ParseError, RunResult, Scenario, ValidationError,
                       compare_disciplines, format_scenario, load_scenario, parse_scenario,
                       run_scenario, run_sweep)
from .topology import (InvalidSpec, Link, RoutingTable, StepSpec, Topology,
                       build_step_topology, compute_routes, link_error_probability,
                       link_transmission_delay)
from .traffic import (DeliveryRecord, FtpSource, FtpSourceSpec, MisroutedPacket, Packet,
                      Sink, VoipSource, VoipSourceSpec)

__version__ = "0.1.0"
