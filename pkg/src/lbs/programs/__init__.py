"""Example programs shipped with the package."""
from importlib import resources


def source(name: str) -> str:
    """Source text of the bundled program ``name`` (without extension)."""
    return resources.files(__name__).joinpath(f"{name}.lbs").read_text(encoding="utf-8")


def names() -> list:
    return sorted(p.name[:-4] for p in resources.files(__name__).iterdir() if p.name.endswith(".lbs"))
