from pydantic import BaseModel as PydanticBaseModel
from pydantic import ConfigDict


class BaseModel(PydanticBaseModel):
    """Shared base for reports and resolved configuration.

    Numpy arrays are allowed as fields; models are immutable once built.
    """

    model_config = ConfigDict(
        populate_by_name=True,
        arbitrary_types_allowed=True,
        protected_namespaces=(),
        frozen=True,
    )


class StrictModel(BaseModel):
    """Base for config sections: unknown keys are rejected."""

    model_config = ConfigDict(
        populate_by_name=True,
        protected_namespaces=(),
        frozen=True,
        extra="forbid",
    )
