from .malalaberror import MalaLabError
from typing import TYPE_CHECKING
from importlib import import_module
import builtins
import sys

if TYPE_CHECKING:
    from .configerror import ConfigError
    from .gridtoosmallerror import GridTooSmallError
    from .invalidinputerror import InvalidInputError
    from .numericerror import NumericError
    from .policyunavailableerror import PolicyUnavailableError
    from .profileinvaliderror import ProfileInvalidError
    from .reportschemaerror import ReportSchemaError
    from .undefinedconductanceerror import UndefinedConductanceError
    from .unsupportedtargeterror import UnsupportedTargetError

__all__ = [
    "ConfigError",
    "GridTooSmallError",
    "InvalidInputError",
    "MalaLabError",
    "NumericError",
    "PolicyUnavailableError",
    "ProfileInvalidError",
    "ReportSchemaError",
    "UndefinedConductanceError",
    "UnsupportedTargetError",
]

_dynamic_imports: dict[str, str] = {
    "ConfigError": ".configerror",
    "GridTooSmallError": ".gridtoosmallerror",
    "InvalidInputError": ".invalidinputerror",
    "NumericError": ".numericerror",
    "PolicyUnavailableError": ".policyunavailableerror",
    "ProfileInvalidError": ".profileinvaliderror",
    "ReportSchemaError": ".reportschemaerror",
    "UndefinedConductanceError": ".undefinedconductanceerror",
    "UnsupportedTargetError": ".unsupportedtargeterror",
}


def dynamic_import(modname, retries=3):
    for attempt in range(retries):
        try:
            return import_module(modname, __package__)
        except KeyError:
            # Clear any half-initialized module and retry
            sys.modules.pop(modname, None)
            if attempt == retries - 1:
                break
    raise KeyError(f"Failed to import module '{modname}' after {retries} attempts")


def __getattr__(attr_name: str) -> object:
    module_name = _dynamic_imports.get(attr_name)
    if module_name is None:
        raise AttributeError(
            f"No {attr_name} found in _dynamic_imports for module name -> {__name__} "
        )

    try:
        module = dynamic_import(module_name)
        return getattr(module, attr_name)
    except ImportError as e:
        raise ImportError(
            f"Failed to import {attr_name} from {module_name}: {e}"
        ) from e


def __dir__():
    lazy_attrs = builtins.list(_dynamic_imports.keys())
    return builtins.sorted(lazy_attrs + ["MalaLabError"])
