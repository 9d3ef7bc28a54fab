from setuptools import setup, find_packages

setup(
    name="pydisco",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "examples"]),
    python_requires=">=3.8",
    install_requires=[
        "numpy",
        "func_timeout",
    ],
    extras_require={
        "dev": [
            "pytest",
            "pytest-cov",
        ],
    },
)
