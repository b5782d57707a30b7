"""Built-in multi-agent applications.

Output lengths are lognormal per agent. Absolute token counts are
illustrative; what matters is the spread between agents, from a router
emitting a couple of dozen tokens to writers emitting hundreds.
"""

from collections.abc import Callable

from agentflow.workload.spec import (
    AgentSpec,
    ApplicationSpec,
    ArrivalSpec,
    DownstreamChoice,
    FeedbackSpec,
    LengthDistribution,
    WorkloadConfig,
)

# Log-space spread of one agent's output lengths
OUTPUT_SIGMA = 0.35


def _ln(median: float, sigma: float, maximum: int) -> LengthDistribution:
    return LengthDistribution.lognormal(median, sigma, maximum)


def _agent(name: str, prompt: float, output: float, out_max: int, **calls) -> AgentSpec:
    return AgentSpec(
        name=name,
        prompt_len=_ln(prompt, 0.3, 2048),
        output_len=_ln(output, OUTPUT_SIGMA, out_max),
        **calls,
    )


def qa_application(branch_probability: float = 0.7, weight: float = 1.0) -> ApplicationSpec:
    """Question answering: a router picks a math or a humanities expert."""
    branches = [("Math", branch_probability), ("Humanities", 1 - branch_probability)]
    return ApplicationSpec(
        name="qa",
        entry="Router",
        weight=weight,
        agents=[
            _agent(
                "Router",
                300,
                25,
                96,
                downstream=[
                    DownstreamChoice(agent=agent, probability=p)
                    for agent, p in branches
                    if p > 0
                ],
            ),
            _agent("Math", 400, 250, 1024),
            _agent("Humanities", 400, 500, 1536),
        ],
    )


def rg_application(weight: float = 1.0) -> ApplicationSpec:
    """Report generation: a researcher collects material, a writer drafts."""
    return ApplicationSpec(
        name="rg",
        entry="Researcher",
        weight=weight,
        agents=[
            _agent(
                "Researcher",
                500,
                350,
                1024,
                downstream=[DownstreamChoice(agent="Writer", probability=1.0)],
            ),
            _agent("Writer", 800, 650, 2048),
        ],
    )


def cg_application(
    feedback_probability: float = 0.4, max_iterations: int = 3, weight: float = 1.0
) -> ApplicationSpec:
    """Code generation: five roles in a row, QA sending work back to the engineer."""

    def then(agent: str) -> list[DownstreamChoice]:
        return [DownstreamChoice(agent=agent, probability=1.0)]

    return ApplicationSpec(
        name="cg",
        entry="ProductManager",
        weight=weight,
        agents=[
            _agent("ProductManager", 400, 200, 768, downstream=then("Architect")),
            _agent("Architect", 600, 300, 1024, downstream=then("ProjectManager")),
            _agent("ProjectManager", 600, 120, 512, downstream=then("Engineer")),
            _agent("Engineer", 800, 450, 1536, downstream=then("QAEngineer")),
            _agent(
                "QAEngineer",
                900,
                80,
                256,
                feedback=FeedbackSpec(
                    target="Engineer",
                    probability=feedback_probability,
                    max_iterations=max_iterations,
                ),
            ),
        ],
    )


def parallel_fanout_application(weight: float = 1.0) -> ApplicationSpec:
    """A planner consulting three experts at once."""
    return ApplicationSpec(
        name="parallel_fanout",
        entry="Planner",
        weight=weight,
        agents=[
            _agent("Planner", 300, 60, 256, parallel=["LawExpert", "MedExpert", "FinExpert"]),
            _agent("LawExpert", 400, 200, 768),
            _agent("MedExpert", 400, 300, 1024),
            _agent("FinExpert", 400, 120, 512),
        ],
    )


def sequential_fanout_application(weight: float = 1.0) -> ApplicationSpec:
    """A coordinator calling three helpers one after another."""
    return ApplicationSpec(
        name="sequential_fanout",
        entry="Coordinator",
        weight=weight,
        agents=[
            _agent("Coordinator", 300, 40, 128, sequential=["Search", "Summarize", "Verify"]),
            _agent("Search", 300, 100, 512),
            _agent("Summarize", 600, 250, 1024),
            _agent("Verify", 500, 60, 256),
        ],
    )


TEMPLATES: dict[str, Callable[..., ApplicationSpec]] = {
    "qa": qa_application,
    "rg": rg_application,
    "cg": cg_application,
    "parallel_fanout": parallel_fanout_application,
    "sequential_fanout": sequential_fanout_application,
}


def colocated_workload(
    rate: float = 1.0, duration: float = 600.0, seed: int = 0
) -> WorkloadConfig:
    """QA, RG and CG sharing one deployment with equal arrival shares."""
    return WorkloadConfig(
        applications=[qa_application(), rg_application(), cg_application()],
        arrival=ArrivalSpec(kind="poisson", rate=rate),
        duration=duration,
        seed=seed,
    )


def heavy_light_workload(
    rate: float = 1.0, duration: float = 300.0, seed: int = 0
) -> WorkloadConfig:
    """Interleaved long-output and short-output single-agent applications.

    Long requests grow their KV cache for a long time after admission, which
    is what a dispatcher looking only at current usage gets wrong.
    """
    heavy = ApplicationSpec(
        name="heavy",
        entry="Drafter",
        agents=[
            AgentSpec(
                name="Drafter",
                prompt_len=_ln(600, 0.2, 1024),
                output_len=_ln(1200, 0.2, 2048),
            )
        ],
    )
    light = ApplicationSpec(
        name="light",
        entry="Classifier",
        agents=[
            AgentSpec(
                name="Classifier",
                prompt_len=_ln(1200, 0.2, 2048),
                output_len=_ln(20, 0.3, 64),
            )
        ],
    )
    return WorkloadConfig(
        applications=[heavy, light],
        arrival=ArrivalSpec(kind="poisson", rate=rate),
        duration=duration,
        seed=seed,
    )
