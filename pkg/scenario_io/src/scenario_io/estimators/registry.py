from typing import Callable, Dict


class EstimatorRegistry:
    """Name -> fitting function table; fitting functions take (instance, dataset, config)."""

    def __init__(self) -> None:
        self._estimators: Dict[str, Callable] = {}

    def register(self, name: str, fn: Callable) -> None:
        self._estimators[name] = fn

    def names(self) -> list[str]:
        return sorted(self._estimators)

    def apply(self, name: str, instance, dataset, config):
        if name not in self._estimators:
            raise KeyError(f"Estimator {name} not found")
        return self._estimators[name](instance, dataset, config)
