#!/usr/bin/env python3
"""
folio 项目安装配置
"""

from setuptools import setup, find_packages

setup(
    name="folio",
    version="0.1.0",
    description="历史文献数字化流水线",
    author="Sicheng Hua",
    author_email="sc_hua@qq.com",
    packages=find_packages(include=["folio", "folio.*"]),
    install_requires=[
        "pydantic>=2.0.0",
        "aiohttp>=3.8.0",
        "aiofiles>=23.2.0",
        "openai>=1.0.0",
        "pillow>=9.0.0",
        "python-dotenv>=1.0.0",
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "scikit-image>=0.21.0",
        "lxml>=4.9.0",
        "requests>=2.28.0",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-asyncio>=0.21.0",
        ]
    },
    entry_points={"console_scripts": ["folio=folio.cli:main"]},
    python_requires=">=3.10",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
)
