"""
Test suite for AI Music Mastering API
"""