"""Hand-built label sequences with hand-enumerated events."""
from orientcloud.behavior import I1, I2, NEUTRAL as N

EXCLUSION_EXPECTED = [(I2, 50, 89), (I1, 150, 179)]

# 90 frames with planted contacts of lengths 3, 5, 8 and 3
CONTACT_FIXTURE = ([N] * 5 + [I1] * 3 + [N] * 4 + [I2] * 5 + [N] * 2 + [I1] * 2 + [N] * 10
                   + [I1] * 8 + [I2] + [N] * 20 + [I2] * 3 + [N] * 27)
CONTACT_EXPECTED = [(I1, 5, 7), (I2, 12, 16), (I1, 31, 38), (I2, 60, 62)]


def exclusion_fixture():
    """300 frames with two planted exclusion episodes (spans in EXCLUSION_EXPECTED)."""
    lab = []
    lab += [(I1, I2, N, N)[k % 4] for k in range(50)]          # 0-49 mixed
    lab += [I1] * 40                                           # 50-89 I2 excluded
    lab += [(I2, I1, N, N)[k % 4] for k in range(60)]          # 90-149 mixed
    lab += [N] * 5 + [I2] * 20 + [N] * 5                       # 150-179 I1 excluded
    lab += [(I1, I2, N, N)[k % 4] for k in range(120)]         # 180-299 mixed
    return lab
