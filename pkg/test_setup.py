import importlib

import pytest

MODULES = [
    "numpy",
    "scipy.linalg",
    "scipy.optimize",
    "pydantic",
    "pydantic_settings",
    "click",
    "services.fluid_model",
    "services.quasilinear",
    "services.linear_stability",
    "services.finite_volume",
    "services.profiles",
    "services.solver",
    "services.breakdown",
    "services.report_formatter",
    "services.scenario",
]


@pytest.mark.parametrize("name", MODULES)
def test_imports(name):
    importlib.import_module(name)


def test_settings_defaults():
    from src.viscoflow.config import settings

    assert settings.VISCOFLOW_THREADS >= 1
    assert 0 < settings.DEFAULT_CFL <= 1
    assert settings.DEFAULT_N_GHOST == 2


if __name__ == "__main__":
    print("Testing imports...")
    for name in MODULES:
        try:
            importlib.import_module(name)
            print(f"OK     {name}")
        except Exception as e:
            print(f"FAILED {name}: {e}")
    print("\nAll good! Run: pip install -r requirements.txt")
