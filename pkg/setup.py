"""
Setup script for reflexcr
"""
from setuptools import setup, find_packages

setup(
    name="reflexcr",
    version="0.1.0",
    description="Numerical Schwarz reflection, edge-of-the-wedge and CR extension toolkit",
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.9",
    install_requires=[
        "pydantic==2.5.0",
        "pydantic-settings==2.1.0",
        "python-dotenv==1.0.0",
        "numpy==1.26.2",
        "scipy==1.11.4",
        "sympy==1.12",
        "joblib==1.3.2",
        "click==8.1.7",
        "rich==13.7.0",
    ],
    extras_require={
        "test": [
            "pytest==7.4.3",
            "hypothesis==6.92.1",
        ],
    },
    entry_points={
        "console_scripts": [
            "reflexcr=reflexcr.cli:cli",
        ],
    },
)
