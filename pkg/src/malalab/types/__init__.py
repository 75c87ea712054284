from .basemodel import BaseModel, StrictModel

__all__ = [
    "BaseModel",
    "StrictModel",
]
