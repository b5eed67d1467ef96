"""Litmus congestion-aware serverless pricing simulator."""
