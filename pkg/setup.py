from setuptools import setup, find_packages

setup(
    name='diffusal',
    description='Graph active learning with diffusion-based node selection',
    packages=find_packages(exclude=['ez_setup', 'test', 'test.*']),
    scripts=['bin/diffusal'],
    python_requires='>=3.7',
    install_requires=(
        'click>=8.0',
        'numba',
        'numpy>=1.17',
        'pandas>=1.0',
        'pyyaml',
        'scikit-learn',
        'scipy',
        'tqdm',
    ),
    tests_require=[
        'pytest',
    ],
)
