"""Task DAGs, handoff artifacts, the guarded sub-agent loop and the swarm supervisor."""

from rgao.swarm.agent import (
    Fault,
    FaultKind,
    SimulatedAgent,
    SimulatedTimeout,
    SimulatedToolError,
    Step,
    SubAgentResult,
    SubAgentStatus,
    ToolCall,
    final_step,
    run_subagent,
    tool_step,
)
from rgao.swarm.artifacts import (
    ARTIFACT_KINDS,
    DATA_BEARING_KINDS,
    PRODUCED_KIND,
    ArtifactError,
    SwarmArtifact,
    canonical_bytes,
    digest,
    handoff_violations,
    make_artifact,
)
from rgao.swarm.chattiness import GOLDEN_SCENARIOS, ChattinessDetector, run_scenario
from rgao.swarm.dag import (
    MAX_RETRIES,
    CyclicDependencyError,
    SwarmTask,
    TaskDag,
    TaskSpec,
    TaskStatus,
    build_dag,
    detect_pipeline,
)
from rgao.swarm.scheduler import (
    BudgetGateFailure,
    ContractGateFailure,
    GateFailure,
    HandoffGateFailure,
    InterventionKind,
    InterventionRecord,
    SwarmRun,
    SwarmStatus,
    TraceEvent,
    decide_intervention,
    default_policy,
    delegation_forest,
    recommended_swarm_budget,
    run_swarm,
    swarm_reservation,
    three_gates,
)
from rgao.swarm.scripts import default_agent, script_steps

import types as _types

__all__ = [n for n, v in dict(globals()).items() if not n.startswith("_") and not isinstance(v, _types.ModuleType)]
