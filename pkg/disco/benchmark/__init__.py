"""Benchmark container of activations, weights and inputs."""

from .container import (HEADER, MAGIC, VERSION, BenchmarkReader, BenchmarkRecord, encode_record, load_state,
                        read_benchmark, save_state, write_benchmark)
from .export import WEIGHT_PREFIX, client_state_from_record, export_run, restore_client

__all__ = ['HEADER', 'MAGIC', 'VERSION', 'BenchmarkReader', 'BenchmarkRecord', 'encode_record', 'load_state',
           'read_benchmark', 'save_state', 'write_benchmark', 'WEIGHT_PREFIX', 'client_state_from_record',
           'export_run', 'restore_client']
