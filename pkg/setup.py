"""
Package Setup
Installs the sepsis package and the `sepsis-mortality` console script
"""

from pathlib import Path

from setuptools import find_packages, setup


def read_requirements(path: str = "requirements.txt") -> list:
    """Runtime requirements; test-only packages follow the `# tests` marker"""
    lines = Path(__file__).with_name(path).read_text(encoding="utf-8").splitlines()
    runtime = []
    for line in lines:
        if line.strip().startswith("# tests"):
            break
        if line.strip() and not line.startswith("#"):
            runtime.append(line.strip())
    return runtime


setup(
    name="sepsis-mortality",
    version="1.0.0",
    description="Sepsis in-hospital mortality prediction: cohort extraction, learners, evaluation and TreeSHAP",
    long_description=Path(__file__).with_name("README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=("tests", "tests.*")),
    python_requires=">=3.10",
    install_requires=read_requirements(),
    extras_require={"test": ["pytest>=7.4", "scikit-learn>=1.3"]},
    entry_points={"console_scripts": ["sepsis-mortality=sepsis.cli:main"]},
)
