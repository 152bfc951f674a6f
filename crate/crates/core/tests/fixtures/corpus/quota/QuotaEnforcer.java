package org.apache.hadoop.yarn.server.quota;

public class QuotaEnforcer {
    private static final Logger LOG = LoggerFactory.getLogger(QuotaEnforcer.class);

    public boolean admit(Request request, Limits limits) {
        long requested = request.getMemory();
        long granted = limits.currentMemory();
        if (requested + granted > limits.maxMemory()) {
            LOG.warn("Tenant usage over quota, tenant usage quota record usage " + request.getId());
            return false;
        }
        limits.reserve(requested);
        return true;
    }
}
