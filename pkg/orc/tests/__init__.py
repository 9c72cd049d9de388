# Test suite for the ORC rule engine
