"""Exception hierarchy. Every error raised on purpose derives from ComposeError."""


class ComposeError(Exception):
    pass


# ontology
class DuplicateNameError(ComposeError):
    pass


class UnknownPartitionError(ComposeError):
    pass


class UnknownConceptError(ComposeError):
    pass


class CycleIntroducedError(ComposeError):
    """Raised by the ontology (subsumption) and by conjectures (ordering)."""


# service model
class DescriptionSyntaxError(ComposeError):
    pass


class DanglingProcessReferenceError(ComposeError):
    pass


class ForeignConceptError(ComposeError):
    def __init__(self, parameter: str, concept: str, owner: str, expected: str):
        super().__init__(
            f"parameter {parameter!r} uses concept {concept!r} from sub-ontology "
            f"{owner!r}, expected {expected!r}"
        )
        self.parameter = parameter
        self.concept = concept


class UnreachableEntryPointError(ComposeError):
    pass


class RecursiveProcessCycleError(ComposeError):
    pass


# planner
class UnboundVariableError(ComposeError):
    pass


class NotApplicableError(ComposeError):
    pass


class InstanceTooLargeError(ComposeError):
    pass


# conjecture
class MalformedConjectureError(ComposeError):
    pass


class NotUnifiableError(ComposeError):
    pass


class InconsistentInstantiationError(ComposeError):
    pass


class MergeBreaksAcyclicityError(CycleIntroducedError):
    pass


class NotASolutionError(ComposeError):
    pass


# agents
class MalformedDocumentError(ComposeError):
    pass


class UnknownClassConceptError(ComposeError):
    pass


class NoMatchingRowError(ComposeError):
    pass


class NoAgentsError(ComposeError):
    pass


class AgentUnreachableError(ComposeError):
    pass


# runtime
class ScenarioIOError(ComposeError):
    pass


class SchemaError(ComposeError):
    pass


class DanglingReferenceError(ComposeError):
    pass


class CorruptTranscriptError(ComposeError):
    pass
