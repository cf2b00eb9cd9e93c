"""
Clumsy coupon collector test suite
Exact law, simulators, asymptotics, harness and command line
"""
