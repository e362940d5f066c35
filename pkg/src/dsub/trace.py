"""Rule-application traces for the algorithmic relations.

Every successful exposure, promotion/demotion, step-subtyping, and
step-typing computation produces a :class:`StepTrace`: a tree whose nodes
name the applied rule and record the judgment it established.  Traces are
the input to the declarative elaborator, which replays them as checkable
declarative derivations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .environment import TypeEnv
from .syntax import print_term, print_type

# Rule names that may appear in traces, grouped by judgment kind.
SUB_STEP_RULES = frozenset(
    (
        "S-Bot",
        "S-Top",
        "S-Refl",
        "S-Typ-<:-Typ",
        "S-All-<:-All",
        "S-<:-Sel",
        "S-Sel-<:",
        "S-Bot-<:",
        "S-<:-Bot",
    )
)
TYP_STEP_RULES = frozenset(("T-Var", "T-All-I", "T-Typ-I", "T-All-E", "T-App-Bot", "T-Let"))
EXPOSE_RULES = frozenset(("X-Bot", "X-Path", "X-Other"))
PROMOTE_RULES = frozenset(("P-Up", "P-Up-Bot", "P-Lam", "P-Var", "P-Bot", "P-Top", "P-Decl", "P-Cap"))
DEMOTE_RULES = frozenset(("D-Down", "D-Down-Bot", "D-Lam", "D-Var", "D-Bot", "D-Top", "D-Decl", "D-Cap"))

TRACE_RULES = SUB_STEP_RULES | TYP_STEP_RULES | EXPOSE_RULES | PROMOTE_RULES | DEMOTE_RULES

_KIND_OF_RULE = {}
for _r in SUB_STEP_RULES:
    _KIND_OF_RULE[_r] = "sub"
for _r in TYP_STEP_RULES:
    _KIND_OF_RULE[_r] = "typ"
for _r in EXPOSE_RULES:
    _KIND_OF_RULE[_r] = "expose"
for _r in PROMOTE_RULES:
    _KIND_OF_RULE[_r] = "promote"
for _r in DEMOTE_RULES:
    _KIND_OF_RULE[_r] = "demote"


@dataclass(frozen=True)
class StepTrace:
    """One rule application.

    ``parts`` depends on the judgment kind:

    - ``sub``:     (lhs type, rhs type)
    - ``typ``:     (term, type)
    - ``expose``:  (source type, exposed type)
    - ``promote``: (source type, variable, result type)
    - ``demote``:  (source type, variable, result type)
    """

    rule: str
    env: TypeEnv
    parts: tuple
    children: tuple = field(default=())

    def __post_init__(self) -> None:
        if self.rule not in TRACE_RULES:
            raise ValueError(f"unknown trace rule: {self.rule!r}")

    @property
    def kind(self) -> str:
        return _KIND_OF_RULE[self.rule]

    @property
    def judgment(self) -> str:
        """The established judgment, rendered in surface syntax."""
        prefix = ", ".join(f"{x}: {print_type(t)}" for x, t in self.env)
        body = ""
        match self.kind:
            case "sub":
                lhs, rhs = self.parts
                body = f"{print_type(lhs)} <: {print_type(rhs)}"
            case "typ":
                term, ty = self.parts
                body = f"{print_term(term)} : {print_type(ty)}"
            case "expose":
                src, out = self.parts
                body = f"{print_type(src)} => {print_type(out)}"
            case "promote":
                src, var, out = self.parts
                body = f"{print_type(src)} =>+{var} {print_type(out)}"
            case "demote":
                src, var, out = self.parts
                body = f"{print_type(src)} =>-{var} {print_type(out)}"
        return f"{prefix} |- {body}" if prefix else f"|- {body}"

    def to_json(self) -> dict:
        """Serialize with the same shape as declarative derivation JSON."""
        payload = {"kind": self.kind, "env": [[x, print_type(t)] for x, t in self.env]}
        match self.kind:
            case "sub":
                payload["lhs"] = print_type(self.parts[0])
                payload["rhs"] = print_type(self.parts[1])
            case "typ":
                payload["term"] = print_term(self.parts[0])
                payload["type"] = print_type(self.parts[1])
            case "expose":
                payload["from"] = print_type(self.parts[0])
                payload["to"] = print_type(self.parts[1])
            case "promote" | "demote":
                payload["from"] = print_type(self.parts[0])
                payload["var"] = self.parts[1]
                payload["to"] = print_type(self.parts[2])
        return {
            "rule": self.rule,
            "judgment": payload,
            "premises": [c.to_json() for c in self.children],
        }
