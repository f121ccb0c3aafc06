"""Setup file for flattrace package."""
from setuptools import setup

setup(
    name='flattrace',
    version='0.1.0',
    description='Translation surfaces, straight-line flows, billiards and the GL(2,R) action',
    packages=['flattrace'],
    include_package_data=True,
    zip_safe=False,
    license='MIT',
    python_requires='>=3.8',
    install_requires=[
        'numpy',
        'pydantic>=2,<3',
        'scipy>=1.10',
        'shapely>=2',
    ],
    entry_points={
        'console_scripts': ['flattrace=flattrace.cli:main'],
    },
)
