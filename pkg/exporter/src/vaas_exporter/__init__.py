"""Backbone feature/attention exporter emitting VAST tensors."""

from .export import ExportConfig, ExportError, export_features
from .vast import encode_tensor, write_tensor_file

__all__ = ["ExportConfig", "ExportError", "export_features",
           "encode_tensor", "write_tensor_file"]
