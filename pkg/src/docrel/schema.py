"""Special-token vocabulary of the linearization schema.

A schema file is a plain INI file::

    [schema]
    coref_separator = ;
    hint_separator = @SEP@
    case_fold = true

    [entity_types]
    CHEMICAL = @CHEMICAL@
    DISEASE = @DISEASE@

    [relation_types]
    # token followed by arity (defaults to 2)
    CID = @CID@ 2

Keys are case sensitive. Bundled presets (``cdr``, ``gda``, ``dgm``) can be
loaded by name with :func:`load_schema`.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from functools import cached_property
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

PRESETS = ("cdr", "gda", "dgm")


class SchemaError(ValueError):
    """Raised for an inconsistent or unreadable schema configuration."""


@dataclass(frozen=True)
class SchemaConfig:
    entity_types: Mapping[str, str]
    relation_types: Mapping[str, tuple[str, int]]
    coref_separator: str = ";"
    hint_separator: str = "@SEP@"
    start_token: str = "@START@"
    end_token: str = "@END@"
    case_fold: bool = True

    def __post_init__(self):
        object.__setattr__(self, "entity_types", MappingProxyType(dict(self.entity_types)))
        object.__setattr__(
            self,
            "relation_types",
            MappingProxyType({k: (tok, int(n)) for k, (tok, n) in self.relation_types.items()}),
        )
        self._validate()

    def __reduce__(self):
        # mappingproxy does not pickle; rebuild from plain dicts
        return (
            SchemaConfig,
            (dict(self.entity_types), dict(self.relation_types), self.coref_separator,
             self.hint_separator, self.start_token, self.end_token, self.case_fold),
        )

    def _validate(self) -> None:
        named = [("coref_separator", self.coref_separator),
                 ("hint_separator", self.hint_separator),
                 ("start_token", self.start_token),
                 ("end_token", self.end_token)]
        named += [(f"entity type {k}", tok) for k, tok in self.entity_types.items()]
        named += [(f"relation type {k}", tok) for k, (tok, _) in self.relation_types.items()]

        for name, tok in named:
            if not tok or any(c.isspace() for c in tok):
                raise SchemaError(f"{name}: token {tok!r} must be non-empty and contain no whitespace")
        for label, (tok, arity) in self.relation_types.items():
            if arity < 2:
                raise SchemaError(f"relation type {label}: token {tok!r} has arity {arity}, need >= 2")

        seen: dict[str, str] = {}
        for name, tok in named:
            if tok in seen:
                raise SchemaError(f"duplicate special token {tok!r} ({seen[tok]} and {name})")
            seen[tok] = name
        for name_a, a in named:
            for name_b, b in named:
                if a != b and a in b:
                    raise SchemaError(
                        f"special token {a!r} ({name_a}) is a substring of {b!r} ({name_b})"
                    )

    @cached_property
    def entity_label_of(self) -> dict[str, str]:
        """Entity-type token -> label."""
        return {tok: label for label, tok in self.entity_types.items()}

    @cached_property
    def relation_label_of(self) -> dict[str, str]:
        """Relation-type token -> label."""
        return {tok: label for label, (tok, _) in self.relation_types.items()}

    @cached_property
    def max_arity(self) -> int:
        return max((n for _, n in self.relation_types.values()), default=0)

    def arity(self, relation_type: str) -> int:
        return self.relation_types[relation_type][1]

    def entity_token(self, entity_type: str) -> str:
        try:
            return self.entity_types[entity_type]
        except KeyError:
            raise SchemaError(f"unknown entity type {entity_type!r}") from None

    def relation_token(self, relation_type: str) -> str:
        try:
            return self.relation_types[relation_type][0]
        except KeyError:
            raise SchemaError(f"unknown relation type {relation_type!r}") from None

    @classmethod
    def from_labels(
        cls,
        entity_types: Iterable[str],
        relation_arities: Mapping[str, int],
        **kwargs,
    ) -> "SchemaConfig":
        """Build a schema using the ``@LABEL@`` token convention."""
        return cls(
            entity_types={t: f"@{t.upper()}@" for t in entity_types},
            relation_types={r: (f"@{r.upper()}@", n) for r, n in relation_arities.items()},
            **kwargs,
        )

    def to_ini(self) -> str:
        lines = [
            "[schema]",
            f"coref_separator = {self.coref_separator}",
            f"hint_separator = {self.hint_separator}",
            f"start_token = {self.start_token}",
            f"end_token = {self.end_token}",
            f"case_fold = {'true' if self.case_fold else 'false'}",
            "",
            "[entity_types]",
        ]
        lines += [f"{k} = {tok}" for k, tok in self.entity_types.items()]
        lines += ["", "[relation_types]"]
        lines += [f"{k} = {tok} {n}" for k, (tok, n) in self.relation_types.items()]
        return "\n".join(lines) + "\n"


def parse_schema(text: str, source: str = "<string>") -> SchemaConfig:
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#",), inline_comment_prefixes=None
    )
    parser.optionxform = str  # keep label case
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise SchemaError(f"{source}: {e}") from None

    for section in ("entity_types", "relation_types"):
        if not parser.has_section(section):
            raise SchemaError(f"{source}: missing [{section}] section")

    relation_types = {}
    for label, value in parser.items("relation_types"):
        parts = value.split()
        if len(parts) == 1:
            relation_types[label] = (parts[0], 2)
        elif len(parts) == 2 and parts[1].lstrip("-").isdigit():
            relation_types[label] = (parts[0], int(parts[1]))
        else:
            raise SchemaError(f"{source}: relation type {label}: cannot read token/arity from {value!r}")

    options = {}
    if parser.has_section("schema"):
        sec = parser["schema"]
        for key in ("coref_separator", "hint_separator", "start_token", "end_token"):
            if key in sec:
                options[key] = sec[key].strip()
        if "case_fold" in sec:
            try:
                options["case_fold"] = sec.getboolean("case_fold")
            except ValueError:
                raise SchemaError(f"{source}: case_fold must be a boolean, got {sec['case_fold']!r}") from None
        unknown = set(sec) - set(options) - {"case_fold"}
        if unknown:
            raise SchemaError(f"{source}: unknown [schema] keys: {', '.join(sorted(unknown))}")

    try:
        return SchemaConfig(
            entity_types={k: v.strip() for k, v in parser.items("entity_types")},
            relation_types=relation_types,
            **options,
        )
    except SchemaError as e:
        raise SchemaError(f"{source}: {e}") from None


def load_schema(path_or_preset: str | Path) -> SchemaConfig:
    """Load a schema file, or one of the bundled presets by name."""
    name = str(path_or_preset)
    if name in PRESETS and not Path(name).exists():
        text = resources.files("docrel").joinpath("schemas", f"{name}.ini").read_text()
        return parse_schema(text, source=f"preset:{name}")
    path = Path(path_or_preset)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SchemaError(f"cannot read schema file {path}: {e.strerror}") from None
    return parse_schema(text, source=str(path))
