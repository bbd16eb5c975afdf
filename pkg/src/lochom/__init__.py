"""Locally homogeneous spaces on finite weighted point clouds."""
