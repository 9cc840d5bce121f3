"""bamsim: admission control for emulated MPLS LSPs under per-class
bandwidth allocation models (MAM and RDM), with runtime hard/soft
constraint reconfiguration and a discrete-event scenario runner."""

from .bam import (
    AdmissionDecision,
    Infeasible,
    ReconfigEvent,
    ReconfigMode,
    Verdict,
    check_mam,
    check_rdm,
    decide,
    promote_pending_if_clear,
    reconfigure,
    select_victims,
)
from .controller import (
    ClassificationFailure,
    Classifier,
    Controller,
    LspRequest,
    RequestOutcome,
)
from .core import (
    BcConfig,
    CapacityViolation,
    InvalidBc,
    Link,
    Lsp,
    LspState,
    Model,
    NetworkState,
    NoRoute,
    NotActive,
    Topology,
    TrafficClass,
    UnknownLsp,
    commit,
    kbps,
    mbps,
    path_for,
    release,
)
from .fabric import Fabric, FlowMatch, FlowRule, RuleConflict, UnknownSwitch
from .metrics import MetricsLog, MetricsRecord, RateUndefined
from .scenario import (
    ParseError,
    Scenario,
    ScenarioError,
    ValidationError,
    load,
    parse_file,
    parse_text,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "AdmissionDecision",
    "BcConfig",
    "CapacityViolation",
    "ClassificationFailure",
    "Classifier",
    "Controller",
    "Fabric",
    "FlowMatch",
    "FlowRule",
    "Infeasible",
    "InvalidBc",
    "Link",
    "Lsp",
    "LspRequest",
    "LspState",
    "MetricsLog",
    "MetricsRecord",
    "Model",
    "NetworkState",
    "NoRoute",
    "NotActive",
    "ParseError",
    "RateUndefined",
    "ReconfigEvent",
    "ReconfigMode",
    "RequestOutcome",
    "RuleConflict",
    "Scenario",
    "ScenarioError",
    "Topology",
    "TrafficClass",
    "UnknownLsp",
    "UnknownSwitch",
    "ValidationError",
    "Verdict",
    "check_mam",
    "check_rdm",
    "commit",
    "decide",
    "kbps",
    "load",
    "mbps",
    "parse_file",
    "parse_text",
    "path_for",
    "promote_pending_if_clear",
    "reconfigure",
    "release",
    "select_victims",
    "simulate",
    "__version__",
]
