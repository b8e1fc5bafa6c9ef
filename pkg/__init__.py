import zkcbridge
