from setuptools import find_packages, setup


with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="dicova-bench",
    version="0.1.0",
    description="Acoustic COVID-19 screening benchmark: corpus, features, baselines, evaluation and leaderboard",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=("tests", "tests.*")),
    py_modules=["main"],
    install_requires=[
        "pydantic~=2.12",
        "loguru~=0.7.3",
        "structlog~=25.5",
        "numpy>=2.0",
        "scipy>=1.13",
        "scikit-learn>=1.5",
        "fastapi>=0.115",
        "uvicorn~=0.41",
    ],
    extras_require={
        "test": ["pytest>=8", "hypothesis>=6.100", "httpx>=0.27"],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.12",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.11",
    entry_points={
        "console_scripts": [
            "dicova=main:main",
        ],
    },
)
