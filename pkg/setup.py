from setuptools import setup

__version__ = None
exec(open('spdprox/version.py', 'r').read())

INSTALL_REQUIREMENTS = ['torch>=1.9', 'scipy>=1.6.0', 'tqdm']

setup(
    name='spdprox',
    version=__version__,
    description='Exact and inexact proximal point methods on symmetric positive definite matrices',
    long_description='Exact and inexact proximal point methods on symmetric positive definite '
                     'matrices, with a line search over the diagonal/orthogonal decomposition',
    install_requires=INSTALL_REQUIREMENTS,
    extras_require={'tensorboard': ['tensorboard>=2.4.0'], 'test': ['pytest']},
    packages=['spdprox'],
    zip_safe=False,
)
