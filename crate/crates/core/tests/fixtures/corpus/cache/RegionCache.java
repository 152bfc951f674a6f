package org.apache.hadoop.hbase.client;

public class RegionCache {
    private static final Logger LOG = LoggerFactory.getLogger(RegionCache.class);

    private final Map<String, RegionLocation> regions = new ConcurrentHashMap<>();

    public void evict(String tableName, byte[] row) {
        String key = cacheKey(tableName, row);
        RegionLocation removed = regions.remove(key);
        if (removed != null) {
            LOG.debug("Evicted cached region " + removed.getRegionName());
        }
    }

    public void expire(String tableName, byte[] row) {
        String key = cacheKey(tableName, row);
        RegionLocation removed = regions.remove(key);
        if (removed != null) {
            removed.markStale();
        }
    }

    private String cacheKey(String tableName, byte[] row) {
        return tableName + "/" + Bytes.toStringBinary(row);
    }
}
