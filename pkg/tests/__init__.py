"""Test suite for uavport"""
