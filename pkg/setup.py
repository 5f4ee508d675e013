from setuptools import setup, find_packages

setup(
    name="vsclab",
    version="0.3.0",
    description="Numerical laboratory for stability and convergence rates of inverse medium scattering",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={
        "": ["*.toml"],
    },
    include_package_data=True,
    install_requires=[
        "numpy",
        "scipy>=1.12",  # gmres rtol keyword
        "pyee",
        "structlog",
        "sqlalchemy>=2",
        "pydantic>=2",
        "python-dotenv",
        "fsspec",
        "tomli; python_version < '3.11'",
    ],
    extras_require={
        "test": ["pytest", "pytest-asyncio", "pytest-mock"],
    },
    entry_points={
        "console_scripts": [
            "vsclab=src.main:run",
        ],
    },
    python_requires=">=3.10",
)
