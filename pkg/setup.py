from setuptools import setup, find_packages

with open("README.md", "r") as f:
    long_description = f.read()


setup(name = "pidlmi",
    version = "0.1.0",
    description = "pidlmi: robust sparse H-infinity PID synthesis by LMI optimisation",
    long_description = long_description,
    long_description_content_type = "text/markdown",
    license = "MIT",
    packages = find_packages(exclude = ["tests"]),
    install_requires = [
        "argparse", "configargparse>=1.5.3", "numpy", "scipy"
    ],
    extras_require = {
        "test": ["pytest"],
    },
    entry_points = {
        "console_scripts": [
            "pidlmi=pidlmi.pidlmi:main",
            "verify_certificate=pidlmi.verify_certificate:main",
            "simulate_tracking=pidlmi.simulate_tracking:main",
            "sweep_uncertainty=pidlmi.sweep_uncertainty:main",
            "hinf_norm=pidlmi.hinf_norm:main",
            "allocate_forces=pidlmi.allocate_forces:main",
        ],
    },
    zip_safe = False,
    python_requires = ">=3.7",
)
