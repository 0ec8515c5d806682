"""
Test module for the convex integration desk toolkit.
"""
