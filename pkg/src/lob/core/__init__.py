"""Core construct types: values, operands, operators, structures, rules,
state, and annotations, plus the structural validators."""

from .annotations import (
    Annotation,
    AnnotationCycleError,
    AnnotationStore,
    DEFAULT_VOCABULARY,
    OperatorStyle,
    ResolvedTarget,
    Style,
    StyleVocabulary,
    SymbolStyle,
    TargetKind,
    TargetRef,
    resolve_target,
)
from .operands import (
    Application,
    Constant,
    Operand,
    Variable,
    depth,
    free_variables,
    is_ground,
    subtrees,
)
from .operators import (
    ActionalBody,
    FunctionalBody,
    OperatorBody,
    OperatorConstruct,
    OperatorKind,
    OperatorSignature,
    ParamSpec,
    SignatureView,
)
from .rules import (
    Action,
    Condition,
    ConnectorNode,
    ControlStructure,
    RewritingRule,
    RuleNode,
    iter_rules,
    node_at,
)
from .state import State, state_of
from .structures import LayoutStructure, TopologicalObject, WebStructure
from .validate import (
    ValidationReport,
    Violation,
    infer_type,
    validate_annotation,
    validate_annotations,
    validate_control_structure,
    validate_layout,
    validate_operand,
    validate_rule,
    validate_web_structure,
)
from .values import (
    ConstructionError,
    Coordinates,
    FALSE,
    TRUE,
    TypedVariable,
    Value,
    ValueKind,
    check_identifier,
    is_identifier,
)

__all__ = [
    "Action",
    "ActionalBody",
    "Annotation",
    "AnnotationCycleError",
    "AnnotationStore",
    "Application",
    "Condition",
    "ConnectorNode",
    "Constant",
    "ConstructionError",
    "ControlStructure",
    "Coordinates",
    "DEFAULT_VOCABULARY",
    "FALSE",
    "FunctionalBody",
    "LayoutStructure",
    "Operand",
    "OperatorBody",
    "OperatorConstruct",
    "OperatorKind",
    "OperatorSignature",
    "OperatorStyle",
    "ParamSpec",
    "ResolvedTarget",
    "RewritingRule",
    "RuleNode",
    "SignatureView",
    "State",
    "Style",
    "StyleVocabulary",
    "SymbolStyle",
    "TRUE",
    "TargetKind",
    "TargetRef",
    "TopologicalObject",
    "TypedVariable",
    "ValidationReport",
    "Value",
    "ValueKind",
    "Variable",
    "Violation",
    "WebStructure",
    "check_identifier",
    "depth",
    "free_variables",
    "infer_type",
    "is_ground",
    "is_identifier",
    "iter_rules",
    "node_at",
    "resolve_target",
    "state_of",
    "subtrees",
    "validate_annotation",
    "validate_annotations",
    "validate_control_structure",
    "validate_layout",
    "validate_operand",
    "validate_rule",
    "validate_web_structure",
]
